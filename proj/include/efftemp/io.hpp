#pragma once

// On-disk formats: spectrum cache, parameter checkpoints, CSV exports and
// content hashes. Binary payloads are little-endian.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "efftemp/ansatz.hpp"
#include "efftemp/model.hpp"
#include "efftemp/optimize.hpp"
#include "efftemp/spectral.hpp"

namespace efftemp::io {

inline constexpr std::uint32_t kSpectrumFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file(const std::filesystem::path& path);

// Content key of a spectrum: lattice, couplings, fields, sector mode and the
// bit convention, hashed bit-exactly.
std::string spectrum_cache_key(const model::Lattice& lattice, const model::XXZParams& params, bool sectored);
std::string hash_fields(std::span<const double> h);

void write_spectrum(const std::filesystem::path& path, const model::Spectrum& spectrum,
                    const model::Lattice& lattice, const model::XXZParams& params);
// Throws IntegrityError on a malformed file or a key mismatch when
// `expected_key` is nonempty.
model::Spectrum read_spectrum(const std::filesystem::path& path, const std::string& expected_key = {});
nlohmann::json read_spectrum_header(const std::filesystem::path& path);

nlohmann::json spec_to_json(const ansatz::AnsatzSpec& spec);
ansatz::AnsatzSpec spec_from_json(const nlohmann::json& j);

struct Checkpoint {
  ansatz::AnsatzSpec spec;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::vector<double> params;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Shortest round-trip decimal form, '.' separator, locale independent.
std::string format_double(double v);

inline constexpr const char* kTrajectoryHeader =
    "step,loss,energy,infidelity,beta_tilde,delta_beta_tilde,lambda,r_squared,mse,wall_ms";

std::string trajectory_row(const optimize::TrainRecord& record);
void write_trajectory(const std::filesystem::path& path, std::span<const optimize::TrainRecord> records);
std::vector<optimize::TrainRecord> read_trajectory(const std::filesystem::path& path);

// One row per decomposition entry: epsilon, weight, sector, used_in_fit.
void write_scatter(const std::filesystem::path& path, const spectral::Decomposition& decomp,
                   std::span<const std::size_t> used_indices);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace efftemp::io
