#include "uqimg/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "uqimg/errors.hpp"
#include "uqimg/hash.hpp"

namespace uqimg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size() || v < 0) throw std::invalid_argument("negative");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a nonnegative integer, got '" +
                          value + "'");
    }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" +
                          value + "'");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a real number, got '" + value +
                          "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    if (data.count < 1) throw ConfigError("config: data.count must be >= 1");
    if (data.height < 1 || data.width < 1)
        throw ConfigError("config: image dimensions must be positive");
    if (data.mask_fraction <= 0.0 || data.mask_fraction > 1.0)
        throw ConfigError("config: data.mask_fraction must lie in (0, 1]");
    if (data.noise_sigma < 0.0)
        throw ConfigError("config: data.noise_sigma must be nonnegative");
    try {
        train.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: train section invalid: ") + e.what());
    }
    if (ensemble.t2 < 1) throw ConfigError("config: ensemble.t2 must be >= 1");
    if (ensemble.swag_snapshot_policy != "final-half")
        throw ConfigError("config: unsupported swag_snapshot_policy '" +
                          ensemble.swag_snapshot_policy + "'");
    if (ensemble.dropout_rate < 0.0 || ensemble.dropout_rate >= 1.0)
        throw ConfigError("config: ensemble.dropout_rate must lie in [0, 1)");
    if (infer.t1 < 1) throw ConfigError("config: infer.t1 must be >= 1");
    if (infer.eps2 <= 0.0) throw ConfigError("config: infer.eps2 must be positive");
    if (infer.dense_covariance && data.height * data.width > 64)
        throw ConfigError("config: dense covariance is limited to N <= 64");
    if (!(conformal.alpha_start > 0.0 && conformal.alpha_stop < 1.0 &&
          conformal.alpha_start <= conformal.alpha_stop))
        throw ConfigError("config: conformal alpha grid must satisfy 0 < start <= stop < 1");
    if (conformal.alpha_count < 1 || conformal.split_count < 1 || conformal.n_cal < 1)
        throw ConfigError("config: conformal counts must be >= 1");
    if (outputs.directory.empty()) throw ConfigError("config: outputs.directory is empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        std::string::size_type comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "data" && section != "train" && section != "ensemble" &&
                section != "infer" && section != "conformal" && section != "outputs")
                throw ConfigError("config: unknown section '" + section + "'");
            continue;
        }

        std::string::size_type eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' appears before any section");

        bool known = true;
        if (section == "data") {
            if (key == "source") cfg.data.source = value;
            else if (key == "count") cfg.data.count = parse_count(key, value);
            else if (key == "height") cfg.data.height = parse_count(key, value);
            else if (key == "width") cfg.data.width = parse_count(key, value);
            else if (key == "mask_fraction") cfg.data.mask_fraction = parse_real(key, value);
            else if (key == "noise_sigma") cfg.data.noise_sigma = parse_real(key, value);
            else known = false;
        } else if (section == "train") {
            if (key == "epochs") cfg.train.epochs = parse_count(key, value);
            else if (key == "batch_size") cfg.train.batch_size = parse_count(key, value);
            else if (key == "learning_rate") cfg.train.learning_rate = parse_real(key, value);
            else if (key == "warmup_epochs") cfg.train.warmup_epochs = parse_count(key, value);
            else if (key == "hidden_width") cfg.train.hidden_width = parse_count(key, value);
            else if (key == "latent_dim") cfg.train.latent_dim = parse_count(key, value);
            else if (key == "seed") cfg.train.seed = parse_seed(key, value);
            else known = false;
        } else if (section == "ensemble") {
            if (key == "strategy") {
                try {
                    cfg.ensemble.strategy = ensemble_strategy_from_string(value);
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("config: ") + e.what());
                }
            } else if (key == "t2") cfg.ensemble.t2 = parse_count(key, value);
            else if (key == "master_seed") cfg.ensemble.master_seed = parse_seed(key, value);
            else if (key == "swag_snapshot_policy") cfg.ensemble.swag_snapshot_policy = value;
            else if (key == "dropout_rate") cfg.ensemble.dropout_rate = parse_real(key, value);
            else known = false;
        } else if (section == "infer") {
            if (key == "t1") cfg.infer.t1 = parse_count(key, value);
            else if (key == "eps2") cfg.infer.eps2 = parse_real(key, value);
            else if (key == "seed") cfg.infer.seed = parse_seed(key, value);
            else if (key == "dense_covariance")
                cfg.infer.dense_covariance = parse_bool(key, value);
            else known = false;
        } else if (section == "conformal") {
            if (key == "alpha_start") cfg.conformal.alpha_start = parse_real(key, value);
            else if (key == "alpha_stop") cfg.conformal.alpha_stop = parse_real(key, value);
            else if (key == "alpha_count") cfg.conformal.alpha_count = parse_count(key, value);
            else if (key == "split_count") cfg.conformal.split_count = parse_count(key, value);
            else if (key == "n_cal") cfg.conformal.n_cal = parse_count(key, value);
            else known = false;
        } else if (section == "outputs") {
            if (key == "directory") cfg.outputs.directory = value;
            else known = false;
        }
        if (!known)
            throw ConfigError("config: unknown key '" + key + "' in section [" + section +
                              "]");
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("config file not found: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

std::string ExperimentConfig::canonical_text() const {
    char buf[4096];
    std::snprintf(
        buf, sizeof(buf),
        "[data]\nsource = %s\ncount = %zu\nheight = %zu\nwidth = %zu\n"
        "mask_fraction = %.17g\nnoise_sigma = %.17g\n"
        "[train]\nepochs = %zu\nbatch_size = %zu\nlearning_rate = %.17g\n"
        "warmup_epochs = %zu\nhidden_width = %zu\nlatent_dim = %zu\nseed = %llu\n"
        "[ensemble]\nstrategy = %s\nt2 = %zu\nmaster_seed = %llu\n"
        "swag_snapshot_policy = %s\ndropout_rate = %.17g\n"
        "[infer]\nt1 = %zu\neps2 = %.17g\nseed = %llu\ndense_covariance = %s\n"
        "[conformal]\nalpha_start = %.17g\nalpha_stop = %.17g\nalpha_count = %zu\n"
        "split_count = %zu\nn_cal = %zu\n"
        "[outputs]\ndirectory = %s\n",
        data.source.c_str(), data.count, data.height, data.width, data.mask_fraction,
        data.noise_sigma, train.epochs, train.batch_size, train.learning_rate,
        train.warmup_epochs, train.hidden_width, train.latent_dim,
        static_cast<unsigned long long>(train.seed), to_string(ensemble.strategy).c_str(),
        ensemble.t2, static_cast<unsigned long long>(ensemble.master_seed),
        ensemble.swag_snapshot_policy.c_str(), ensemble.dropout_rate, infer.t1, infer.eps2,
        static_cast<unsigned long long>(infer.seed),
        infer.dense_covariance ? "true" : "false", conformal.alpha_start,
        conformal.alpha_stop, conformal.alpha_count, conformal.split_count, conformal.n_cal,
        outputs.directory.c_str());
    return buf;
}

std::uint64_t ExperimentConfig::config_hash() const {
    std::string text = canonical_text();
    return fnv1a64(text.data(), text.size());
}

}  // namespace uqimg
