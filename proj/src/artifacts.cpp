#include "uqimg/artifacts.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "uqimg/errors.hpp"
#include "uqimg/hash.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw f64 blobs are written little-endian");

namespace uqimg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

std::uint64_t file_hash(const fs::path& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

void write_pgm16(const fs::path& path, const Tensor& values, std::size_t height,
                 std::size_t width) {
    if (values.size() != height * width)
        throw std::length_error("write_pgm16: dimension mismatch");
    double lo = values[0], hi = values[0];
    for (double v : values.data()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) +
                         "\n65535\n";
    std::vector<std::uint8_t> payload(header.begin(), header.end());
    payload.reserve(payload.size() + 2 * values.size());
    for (double v : values.data()) {
        auto q = static_cast<std::uint16_t>(std::lround((v - lo) / span * 65535.0));
        payload.push_back(static_cast<std::uint8_t>(q >> 8));
        payload.push_back(static_cast<std::uint8_t>(q & 0xFF));
    }
    write_file(path, payload.data(), payload.size());

    json sidecar{{"min", lo},
                 {"max", hi},
                 {"height", height},
                 {"width", width},
                 {"encoding", "P5 16-bit big-endian, value = min + sample/65535*(max-min)"}};
    std::string text = sidecar.dump(2) + "\n";
    write_file(fs::path(path).replace_extension(".json"), text.data(), text.size());
}

Pgm16 read_pgm16(const fs::path& path) {
    std::vector<std::uint8_t> bytes = read_file(path);
    // Minimal netpbm parser: magic, whitespace-separated header fields with
    // '#' comments, single whitespace byte, then big-endian samples.
    std::size_t pos = 0;
    auto next_token = [&]() {
        std::string token;
        while (pos < bytes.size()) {
            char c = static_cast<char>(bytes[pos]);
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                if (!token.empty()) return token;
                ++pos;
            } else {
                token.push_back(c);
                ++pos;
            }
        }
        return token;
    };
    if (next_token() != "P5") throw std::runtime_error("read_pgm16: not a P5 file");
    Pgm16 out;
    out.width = std::stoul(next_token());
    out.height = std::stoul(next_token());
    unsigned long maxval = std::stoul(next_token());
    if (maxval != 65535) throw std::runtime_error("read_pgm16: expected 16-bit maxval");
    ++pos;  // single whitespace after maxval
    const std::size_t need = out.width * out.height * 2;
    if (bytes.size() - pos != need)
        throw std::runtime_error("read_pgm16: payload size mismatch");
    out.samples.reserve(out.width * out.height);
    for (std::size_t i = 0; i < need; i += 2)
        out.samples.push_back(static_cast<std::uint16_t>((bytes[pos + i] << 8) |
                                                         bytes[pos + i + 1]));
    return out;
}

void save_dataset(const fs::path& dir, const ImageDataset& d,
                  const ExperimentConfig::Data& meta) {
    d.validate();
    fs::create_directories(dir);
    std::vector<std::uint8_t> idx = write_idx(d);
    write_file(dir / "images.idx", idx.data(), idx.size());

    if (d.has_measurements()) {
        std::vector<double> values;
        std::vector<std::uint8_t> masks;
        for (const Measurement& m : d.measurements) {
            values.insert(values.end(), m.values.data().begin(), m.values.data().end());
            for (double v : m.mask.data())
                masks.push_back(v != 0.0 ? 1 : 0);
        }
        write_file(dir / "measurements.bin", values.data(), values.size() * sizeof(double));
        write_file(dir / "masks.bin", masks.data(), masks.size());
    }

    json meta_json{{"source", meta.source},
                   {"count", d.size()},
                   {"height", d.images.front().height},
                   {"width", d.images.front().width},
                   {"mask_fraction", meta.mask_fraction},
                   {"noise_sigma", meta.noise_sigma},
                   {"has_measurements", d.has_measurements()}};
    std::string text = meta_json.dump(2) + "\n";
    write_file(dir / "dataset.json", text.data(), text.size());
}

ImageDataset load_dataset(const fs::path& dir) {
    if (!fs::exists(dir / "dataset.json"))
        throw MissingInputError("dataset not found at " + dir.string());
    json meta = json::parse(read_file(dir / "dataset.json"));
    ImageDataset d = parse_idx(read_file(dir / "images.idx"));
    d.source_tag = meta.at("source").get<std::string>();

    if (meta.at("has_measurements").get<bool>()) {
        std::vector<std::uint8_t> raw_values = read_file(dir / "measurements.bin");
        std::vector<std::uint8_t> raw_masks = read_file(dir / "masks.bin");
        const std::size_t n = d.images.front().pixel_count();
        if (raw_values.size() != d.size() * n * sizeof(double) ||
            raw_masks.size() != d.size() * n)
            throw std::runtime_error("load_dataset: measurement sidecar size mismatch");
        const double* values = reinterpret_cast<const double*>(raw_values.data());
        for (std::size_t i = 0; i < d.size(); ++i) {
            Tensor v({n}, std::vector<double>(values + i * n, values + (i + 1) * n));
            Tensor mask = Tensor::zeros({n});
            for (std::size_t p = 0; p < n; ++p)
                mask[p] = raw_masks[i * n + p] != 0 ? 1.0 : 0.0;
            d.measurements.push_back(Measurement{std::move(v), std::move(mask)});
        }
    }
    d.validate();
    return d;
}

void save_params(const fs::path& stem, const GeneratorParams& params,
                 std::uint64_t config_hash) {
    Tensor flat = flatten_params(params);
    fs::path blob = stem;
    blob += ".bin";
    write_file(blob, flat.data().data(), flat.size() * sizeof(double));

    json sidecar;
    sidecar["config_hash"] = hex64(config_hash);
    sidecar["flat_length"] = flat.size();
    if (params.is_analytic()) {
        sidecar["variant"] = "analytic";
        sidecar["n_pixels"] = params.analytic().prior_mean.size();
    } else {
        const CvaeMlpParams& p = params.cvae();
        sidecar["variant"] = "cvae-mlp";
        sidecar["n_pixels"] = p.n_pixels;
        sidecar["hidden"] = p.hidden;
        sidecar["latent"] = p.latent;
        sidecar["dropout_rate"] = p.dropout_rate;
        if (!p.dropout_masks.empty()) {
            json masks = json::array();
            for (const Tensor& m : p.dropout_masks) masks.push_back(m.data());
            sidecar["dropout_masks"] = masks;
        }
    }
    fs::path side = stem;
    side += ".json";
    std::string text = sidecar.dump(2) + "\n";
    write_file(side, text.data(), text.size());
}

GeneratorParams load_params(const fs::path& stem) {
    fs::path blob = stem, side = stem;
    blob += ".bin";
    side += ".json";
    if (!fs::exists(side)) throw MissingInputError("parameters not found at " + side.string());
    json sidecar = json::parse(read_file(side));
    std::vector<std::uint8_t> raw = read_file(blob);
    if (raw.size() != sidecar.at("flat_length").get<std::size_t>() * sizeof(double))
        throw std::runtime_error("load_params: blob length mismatch");
    const double* data = reinterpret_cast<const double*>(raw.data());
    Tensor flat({raw.size() / sizeof(double)},
                std::vector<double>(data, data + raw.size() / sizeof(double)));

    const std::string variant = sidecar.at("variant").get<std::string>();
    if (variant == "analytic") {
        std::size_t n = sidecar.at("n_pixels").get<std::size_t>();
        GeneratorParams tmpl{AnalyticParams{Tensor::zeros({n}), 1.0, 1.0}};
        return unflatten_params(tmpl, flat);
    }
    if (variant != "cvae-mlp")
        throw std::runtime_error("load_params: unknown variant " + variant);

    TrainingConfig arch;
    arch.hidden_width = sidecar.at("hidden").get<std::size_t>();
    arch.latent_dim = sidecar.at("latent").get<std::size_t>();
    arch.dropout_rate = sidecar.at("dropout_rate").get<double>();
    RngStream dummy(0, 0);
    GeneratorParams tmpl = init_cvae(arch, sidecar.at("n_pixels").get<std::size_t>(), dummy);
    GeneratorParams params = unflatten_params(tmpl, flat);
    if (sidecar.contains("dropout_masks"))
        for (const auto& mask : sidecar.at("dropout_masks"))
            params.cvae().dropout_masks.push_back(
                Tensor::vector(mask.get<std::vector<double>>()));
    return params;
}

void save_ensemble(const fs::path& dir, const Ensemble& ens, std::uint64_t config_hash) {
    ens.validate();
    fs::create_directories(dir);
    for (std::size_t m = 0; m < ens.size(); ++m) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%03zu", m);
        save_params(dir / name, ens.members[m], config_hash);
    }
    json manifest{{"strategy", to_string(ens.strategy)},
                  {"t2", ens.size()},
                  {"seeds", ens.seeds},
                  {"config_hash", hex64(config_hash)}};
    std::string text = manifest.dump(2) + "\n";
    write_file(dir / "manifest.json", text.data(), text.size());
}

Ensemble load_ensemble(const fs::path& dir) {
    if (!fs::exists(dir / "manifest.json"))
        throw MissingInputError("ensemble not found at " + dir.string());
    json manifest = json::parse(read_file(dir / "manifest.json"));
    Ensemble ens;
    ens.strategy = ensemble_strategy_from_string(manifest.at("strategy").get<std::string>());
    ens.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    const std::size_t t2 = manifest.at("t2").get<std::size_t>();
    for (std::size_t m = 0; m < t2; ++m) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%03zu", m);
        ens.members.push_back(load_params(dir / name));
    }
    ens.validate();
    return ens;
}

namespace {

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_metrics_csv(const fs::path& path, const MetricsReport& report) {
    std::string csv = "example_id,npll,mse,ssim\n";
    for (const ExampleMetrics& row : report.rows)
        csv += std::to_string(row.example_id) + "," + format_real(row.npll) + "," +
               format_real(row.mse) + "," + format_real(row.ssim) + "\n";
    csv += "AGGREGATE," + format_real(report.npll_per_pixel) + "," +
           format_real(report.mse) + "," + format_real(report.ssim) + "\n";
    write_file(path, csv.data(), csv.size());
}

void write_coverage_csv(const fs::path& path, const CoverageReport& report) {
    std::string csv = "alpha,mean_coverage,stderr,mode\n";
    const std::string mode = to_string(report.mode);
    for (std::size_t i = 0; i < report.alpha_grid.size(); ++i)
        csv += format_real(report.alpha_grid[i]) + "," +
               format_real(report.mean_coverage[i]) + "," +
               format_real(report.stderr_coverage[i]) + "," + mode + "\n";
    write_file(path, csv.data(), csv.size());
}

void RunManifest::add_input(const fs::path& path) {
    inputs.emplace_back(path.string(), file_hash(path));
}

void RunManifest::add_output(const fs::path& path) {
    outputs.emplace_back(path.string(), file_hash(path));
}

void write_manifest(const fs::path& path, const RunManifest& manifest) {
    json j;
    j["command"] = manifest.command;
    j["config_hash"] = hex64(manifest.config_hash);
    j["master_seed"] = manifest.master_seed;
    j["library_version"] = manifest.library_version;
    j["duration_seconds"] = manifest.duration_seconds;
    j["inputs"] = json::array();
    for (const auto& [p, h] : manifest.inputs)
        j["inputs"].push_back({{"path", p}, {"fnv1a64", hex64(h)}});
    j["outputs"] = json::array();
    for (const auto& [p, h] : manifest.outputs)
        j["outputs"].push_back({{"path", p}, {"fnv1a64", hex64(h)}});
    if (!manifest.extra_json.empty()) j["details"] = json::parse(manifest.extra_json);
    std::string text = j.dump(2) + "\n";
    write_file(path, text.data(), text.size());
}

}  // namespace uqimg
