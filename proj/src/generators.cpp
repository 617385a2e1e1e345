#include "uqimg/generators.hpp"

#include <cmath>
#include <stdexcept>

#include "uqimg/autodiff.hpp"

namespace uqimg {

namespace {

double silu_scalar(double x) { return x / (1.0 + std::exp(-x)); }

// Fixed traversal order shared by flatten, unflatten and the SGD update.
template <typename Params, typename Fn>
void for_each_weight(Params& p, Fn&& fn) {
    fn(p.dec_w_values);
    fn(p.dec_w_mask);
    fn(p.dec_w_latent);
    fn(p.dec_b1);
    fn(p.dec_w2);
    fn(p.dec_b2);
    fn(p.dec_w3);
    fn(p.dec_b3);
    fn(p.enc_w_pixels);
    fn(p.enc_w_values);
    fn(p.enc_w_mask);
    fn(p.enc_b1);
    fn(p.enc_w_mean);
    fn(p.enc_b_mean);
    fn(p.enc_w_logvar);
    fn(p.enc_b_logvar);
}

Tensor batch_rows(const std::vector<const Tensor*>& rows) {
    const std::size_t b = rows.size();
    const std::size_t n = rows.front()->size();
    std::vector<double> data;
    data.reserve(b * n);
    for (const Tensor* r : rows) data.insert(data.end(), r->data().begin(), r->data().end());
    return Tensor({b, n}, std::move(data), Tensor::Unchecked{});
}

}  // namespace

Tensor sample_latent(const LatentPrior& prior, RngStream& stream) {
    return stream.draw_normal({prior.dimension});
}

GaussianPosterior analytic_posterior(const Tensor& prior_mean, double prior_variance,
                                     double noise_variance, const Measurement& m) {
    if (prior_variance <= 0.0 || noise_variance <= 0.0)
        throw std::invalid_argument("analytic_posterior: variances must be positive");
    require_same_shape(prior_mean, m.mask, "analytic_posterior");
    const std::size_t n = prior_mean.size();
    Tensor mean = Tensor::zeros({n});
    Tensor stddev = Tensor::zeros({n});
    const double prior_prec = 1.0 / prior_variance;
    const double noise_prec = 1.0 / noise_variance;
    const double post_var = 1.0 / (prior_prec + noise_prec);
    for (std::size_t i = 0; i < n; ++i) {
        if (m.mask[i] != 0.0) {
            mean[i] = (m.values[i] * noise_prec + prior_mean[i] * prior_prec) * post_var;
            stddev[i] = std::sqrt(post_var);
        } else {
            mean[i] = prior_mean[i];
            stddev[i] = std::sqrt(prior_variance);
        }
    }
    return GaussianPosterior{std::move(mean), std::move(stddev)};
}

GaussianPosterior analytic_posterior(const AnalyticParams& p, const Measurement& m) {
    return analytic_posterior(p.prior_mean, p.prior_variance, p.noise_variance, m);
}

std::size_t GeneratorParams::latent_dim() const {
    if (is_analytic()) return analytic().prior_mean.size();
    return cvae().latent;
}

std::size_t GeneratorParams::output_dim() const {
    if (is_analytic()) return analytic().prior_mean.size();
    return cvae().n_pixels;
}

Tensor generate_from_posterior(const GaussianPosterior& post, const Tensor& z) {
    require_same_shape(post.mean, z, "generate_from_posterior");
    Tensor out = post.mean;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += post.stddev[i] * z[i];
    return out;
}

Tensor generate(const GeneratorParams& params, const Measurement& m, const Tensor& z) {
    if (z.size() != params.latent_dim())
        throw std::length_error("generate: latent dimension mismatch");
    if (params.is_analytic())
        return generate_from_posterior(analytic_posterior(params.analytic(), m), z);

    const CvaeMlpParams& p = params.cvae();
    if (m.values.size() != p.n_pixels)
        throw std::length_error("generate: measurement dimension mismatch");
    const std::size_t h = p.hidden;
    const std::size_t n = p.n_pixels;

    std::vector<double> h1(h);
    for (std::size_t j = 0; j < h; ++j) h1[j] = p.dec_b1[j];
    for (std::size_t i = 0; i < n; ++i) {
        double v = m.values[i], mk = m.mask[i];
        if (v != 0.0)
            for (std::size_t j = 0; j < h; ++j) h1[j] += v * p.dec_w_values.at2(i, j);
        if (mk != 0.0)
            for (std::size_t j = 0; j < h; ++j) h1[j] += mk * p.dec_w_mask.at2(i, j);
    }
    for (std::size_t k = 0; k < p.latent; ++k) {
        double zv = z[k];
        for (std::size_t j = 0; j < h; ++j) h1[j] += zv * p.dec_w_latent.at2(k, j);
    }
    for (std::size_t j = 0; j < h; ++j) h1[j] = silu_scalar(h1[j]);
    if (!p.dropout_masks.empty())
        for (std::size_t j = 0; j < h; ++j) h1[j] *= p.dropout_masks[0][j];

    std::vector<double> h2(h);
    for (std::size_t j = 0; j < h; ++j) h2[j] = p.dec_b2[j];
    for (std::size_t i = 0; i < h; ++i) {
        double v = h1[i];
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < h; ++j) h2[j] += v * p.dec_w2.at2(i, j);
    }
    for (std::size_t j = 0; j < h; ++j) h2[j] = silu_scalar(h2[j]);
    if (p.dropout_masks.size() > 1)
        for (std::size_t j = 0; j < h; ++j) h2[j] *= p.dropout_masks[1][j];

    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = p.dec_b3[j];
    for (std::size_t i = 0; i < h; ++i) {
        double v = h2[i];
        if (v == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) out[j] += v * p.dec_w3.at2(i, j);
    }
    return Tensor({n}, std::move(out), Tensor::Unchecked{});
}

void TrainingConfig::validate(std::size_t) const {
    if (batch_size == 0 || hidden_width == 0 || latent_dim == 0)
        throw std::invalid_argument("TrainingConfig: counts must be positive");
    if (learning_rate <= 0.0)
        throw std::invalid_argument("TrainingConfig: learning rate must be positive");
    if (warmup_epochs > epochs && epochs > 0)
        throw std::invalid_argument("TrainingConfig: warm-up epochs exceed epochs");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::invalid_argument("TrainingConfig: dropout rate must lie in [0, 1)");
}

GeneratorParams init_cvae(const TrainingConfig& cfg, std::size_t n_pixels, RngStream& stream) {
    cfg.validate();
    const std::size_t n = n_pixels, h = cfg.hidden_width, z = cfg.latent_dim;
    auto winit = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        Tensor w = stream.draw_normal({rows, cols});
        double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : w.data()) v *= scale;
        return w;
    };
    CvaeMlpParams p;
    p.n_pixels = n;
    p.hidden = h;
    p.latent = z;
    p.dropout_rate = cfg.dropout_rate;
    p.dec_w_values = winit(n, h, 2 * n + z);
    p.dec_w_mask = winit(n, h, 2 * n + z);
    p.dec_w_latent = winit(z, h, 2 * n + z);
    p.dec_b1 = Tensor::zeros({1, h});
    p.dec_w2 = winit(h, h, h);
    p.dec_b2 = Tensor::zeros({1, h});
    p.dec_w3 = winit(h, n, h);
    p.dec_b3 = Tensor::zeros({1, n});
    p.enc_w_pixels = winit(n, h, 3 * n);
    p.enc_w_values = winit(n, h, 3 * n);
    p.enc_w_mask = winit(n, h, 3 * n);
    p.enc_b1 = Tensor::zeros({1, h});
    p.enc_w_mean = winit(h, z, h);
    p.enc_b_mean = Tensor::zeros({1, z});
    p.enc_w_logvar = winit(h, z, h);
    p.enc_b_logvar = Tensor::zeros({1, z});
    return GeneratorParams{std::move(p)};
}

GeneratorParams train_generator(const TrainingConfig& cfg, const ImageDataset& data,
                                RngStream stream, TrainingLog* log) {
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("train_generator: empty dataset");
    if (!data.has_measurements())
        throw std::invalid_argument("train_generator: dataset has no measurements");
    data.validate();

    const std::size_t n = data.images.front().pixel_count();
    GeneratorParams params = init_cvae(cfg, n, stream);
    CvaeMlpParams& p = params.cvae();
    const std::size_t h = p.hidden, z = p.latent;
    const std::size_t snapshot_start = cfg.epochs / 2;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double beta =
            cfg.warmup_epochs > 0
                ? std::min(1.0, static_cast<double>(epoch) / cfg.warmup_epochs)
                : 1.0;
        std::vector<std::size_t> order = stream.permutation(data.size());
        double loss_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t b = std::min(cfg.batch_size, order.size() - start);
            std::vector<const Tensor*> pix, val, msk;
            for (std::size_t i = 0; i < b; ++i) {
                std::size_t idx = order[start + i];
                pix.push_back(&data.images[idx].pixels);
                val.push_back(&data.measurements[idx].values);
                msk.push_back(&data.measurements[idx].mask);
            }

            Tape tape;
            NodeId xp = tape.leaf(batch_rows(pix));
            NodeId xv = tape.leaf(batch_rows(val));
            NodeId xm = tape.leaf(batch_rows(msk));
            NodeId eps = tape.leaf(stream.draw_normal({b, z}));
            NodeId ones_col = tape.leaf(Tensor::full({b, 1}, 1.0));
            NodeId half_bz = tape.leaf(Tensor::full({b, z}, 0.5));
            NodeId ones_bz = tape.leaf(Tensor::full({b, z}, 1.0));

            std::vector<std::pair<NodeId, Tensor*>> trainable;
            auto param_leaf = [&](Tensor& t) {
                NodeId id = tape.leaf(t, true);
                trainable.emplace_back(id, &t);
                return id;
            };
            NodeId wdv = param_leaf(p.dec_w_values);
            NodeId wdm = param_leaf(p.dec_w_mask);
            NodeId wdz = param_leaf(p.dec_w_latent);
            NodeId db1 = param_leaf(p.dec_b1);
            NodeId wd2 = param_leaf(p.dec_w2);
            NodeId db2 = param_leaf(p.dec_b2);
            NodeId wd3 = param_leaf(p.dec_w3);
            NodeId db3 = param_leaf(p.dec_b3);
            NodeId wep = param_leaf(p.enc_w_pixels);
            NodeId wev = param_leaf(p.enc_w_values);
            NodeId wem = param_leaf(p.enc_w_mask);
            NodeId be1 = param_leaf(p.enc_b1);
            NodeId wmu = param_leaf(p.enc_w_mean);
            NodeId bmu = param_leaf(p.enc_b_mean);
            NodeId wlv = param_leaf(p.enc_w_logvar);
            NodeId blv = param_leaf(p.enc_b_logvar);

            // Encoder: (pixels || values || mask) -> hidden -> (mean, logvar).
            NodeId he = tape.silu(tape.add(
                tape.add(tape.matmul(xp, wep), tape.matmul(xv, wev)),
                tape.add(tape.matmul(xm, wem), tape.matmul(ones_col, be1))));
            NodeId mu = tape.add(tape.matmul(he, wmu), tape.matmul(ones_col, bmu));
            NodeId logvar = tape.add(tape.matmul(he, wlv), tape.matmul(ones_col, blv));

            // Reparameterized latent draw.
            NodeId std_dev = tape.exp(tape.mul(logvar, half_bz));
            NodeId zb = tape.add(mu, tape.mul(std_dev, eps));

            // Decoder: (values || mask || z) -> hidden -> hidden -> output.
            NodeId h1 = tape.silu(tape.add(
                tape.add(tape.matmul(xv, wdv), tape.matmul(xm, wdm)),
                tape.add(tape.matmul(zb, wdz), tape.matmul(ones_col, db1))));
            if (cfg.dropout_rate > 0.0) {
                Tensor mask({b, h}, std::vector<double>(b * h), Tensor::Unchecked{});
                const double keep = 1.0 - cfg.dropout_rate;
                for (auto& v : mask.data())
                    v = stream.next_uniform() < keep ? 1.0 / keep : 0.0;
                h1 = tape.mul(h1, tape.leaf(std::move(mask)));
            }
            NodeId h2 = tape.silu(
                tape.add(tape.matmul(h1, wd2), tape.matmul(ones_col, db2)));
            if (cfg.dropout_rate > 0.0) {
                Tensor mask({b, h}, std::vector<double>(b * h), Tensor::Unchecked{});
                const double keep = 1.0 - cfg.dropout_rate;
                for (auto& v : mask.data())
                    v = stream.next_uniform() < keep ? 1.0 / keep : 0.0;
                h2 = tape.mul(h2, tape.leaf(std::move(mask)));
            }
            NodeId xhat = tape.add(tape.matmul(h2, wd3), tape.matmul(ones_col, db3));

            NodeId recon = tape.mean(tape.abs(tape.sub(xp, xhat)));

            // Diagonal-Gaussian KL against N(0, I), summed over the latent
            // dimension and averaged over the batch.
            NodeId kl_elems = tape.sub(tape.add(tape.exp(logvar), tape.square(mu)),
                                       tape.add(ones_bz, logvar));
            NodeId kl_sum = tape.sum(kl_elems);
            double kl_per_example = 0.5 * tape.value(kl_sum)[0] / static_cast<double>(b);
            NodeId kl_scale = tape.leaf(Tensor::scalar(0.5 * beta / static_cast<double>(b)));
            NodeId loss = tape.add(recon, tape.mul(kl_sum, kl_scale));

            loss_sum += tape.value(loss)[0];
            ++batches;
            if (log) log->min_batch_kl = std::min(log->min_batch_kl, kl_per_example);

            auto grads = tape.backward(loss);
            for (auto& [id, target] : trainable) {
                const Tensor& g = grads.at(id);
                for (std::size_t i = 0; i < target->size(); ++i)
                    (*target)[i] -= cfg.learning_rate * g[i];
            }
        }

        if (log) {
            log->epoch_mean_loss.push_back(loss_sum / static_cast<double>(batches));
            if (epoch >= snapshot_start) log->snapshots.push_back(flatten_params(params));
        }
    }
    return params;
}

Tensor flatten_params(const GeneratorParams& params) {
    std::vector<double> flat;
    if (params.is_analytic()) {
        const AnalyticParams& a = params.analytic();
        flat = a.prior_mean.data();
        flat.push_back(a.prior_variance);
        flat.push_back(a.noise_variance);
    } else {
        for_each_weight(params.cvae(), [&](const Tensor& t) {
            flat.insert(flat.end(), t.data().begin(), t.data().end());
        });
    }
    std::size_t n = flat.size();
    return Tensor({n}, std::move(flat), Tensor::Unchecked{});
}

GeneratorParams unflatten_params(const GeneratorParams& tmpl, const Tensor& flat) {
    GeneratorParams out = tmpl;
    std::size_t cursor = 0;
    auto take = [&](Tensor& t) {
        if (cursor + t.size() > flat.size())
            throw std::length_error("unflatten_params: flat vector too short");
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = flat[cursor + i];
        cursor += t.size();
    };
    if (out.is_analytic()) {
        AnalyticParams& a = out.analytic();
        take(a.prior_mean);
        if (cursor + 2 != flat.size())
            throw std::length_error("unflatten_params: length mismatch");
        a.prior_variance = flat[cursor];
        a.noise_variance = flat[cursor + 1];
        cursor += 2;
    } else {
        for_each_weight(out.cvae(), take);
        if (cursor != flat.size())
            throw std::length_error("unflatten_params: length mismatch");
    }
    return out;
}

}  // namespace uqimg
