#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uqimg/config.hpp"
#include "uqimg/data.hpp"
#include "uqimg/ensemble.hpp"
#include "uqimg/metrics.hpp"
#include "uqimg/conformal.hpp"

namespace uqimg {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const void* data, std::size_t size);
std::uint64_t file_hash(const std::filesystem::path& path);

/// 16-bit big-endian P5 PGM, min-max scaled; the affine display scaling is
/// recorded in a JSON sidecar next to the file.
void write_pgm16(const std::filesystem::path& path, const Tensor& values,
                 std::size_t height, std::size_t width);

struct Pgm16 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint16_t> samples;
};

Pgm16 read_pgm16(const std::filesystem::path& path);

/// Dataset directory: images.idx plus raw measurement sidecars
/// (measurements.bin f64, masks.bin u8) and dataset.json.
void save_dataset(const std::filesystem::path& dir, const ImageDataset& d,
                  const ExperimentConfig::Data& meta);
ImageDataset load_dataset(const std::filesystem::path& dir);

/// Generator parameters: flat little-endian f64 blob plus a JSON sidecar
/// carrying the variant, shapes, and config hash.
void save_params(const std::filesystem::path& stem, const GeneratorParams& params,
                 std::uint64_t config_hash);
GeneratorParams load_params(const std::filesystem::path& stem);

/// Ensemble directory: one blob per member plus manifest.json.
void save_ensemble(const std::filesystem::path& dir, const Ensemble& ens,
                   std::uint64_t config_hash);
Ensemble load_ensemble(const std::filesystem::path& dir);

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
void write_coverage_csv(const std::filesystem::path& path, const CoverageReport& report);

struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    std::vector<std::pair<std::string, std::uint64_t>> inputs;
    std::vector<std::pair<std::string, std::uint64_t>> outputs;
    double duration_seconds = 0.0;
    std::string library_version = UQIMG_VERSION;
    std::string extra_json;  // command-specific payload, already serialized

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
};

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace uqimg
