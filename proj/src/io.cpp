#include "efftemp/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <memory>
#include <sstream>

#include "efftemp/errors.hpp"

namespace efftemp::io {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kSpectrumMagic{'E', 'F', 'T', 'S', 'P', 'E', 'C', '\0'};
constexpr std::array<char, 8> kCheckpointMagic{'E', 'F', 'T', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  const T le = to_le(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IntegrityError("truncated file: " + path.string());
  return to_le(v);
}

void put_block(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) put(out, v);
  }
}

void get_block(std::istream& in, std::span<double> values, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!in) throw IntegrityError("truncated file: " + path.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : values) v = to_le(v);
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path.string());
  return in;
}

std::string hex_bits(double v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
  return buf;
}

void write_header(std::ostream& out, const std::array<char, 8>& magic, std::uint32_t version, const json& header) {
  out.write(magic.data(), magic.size());
  put<std::uint32_t>(out, version);
  put<std::uint32_t>(out, model::kBitConventionTag);
  const std::string text = header.dump();
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

json read_header(std::istream& in, const std::array<char, 8>& magic, std::uint32_t version,
                 const std::filesystem::path& path) {
  std::array<char, 8> got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) throw IntegrityError("not a recognized file (bad magic): " + path.string());
  const auto ver = get<std::uint32_t>(in, path);
  if (ver != version) throw IntegrityError("unsupported format version " + std::to_string(ver) + ": " + path.string());
  const auto tag = get<std::uint32_t>(in, path);
  if (tag != model::kBitConventionTag) throw IntegrityError("bit-convention tag mismatch: " + path.string());
  const auto len = get<std::uint64_t>(in, path);
  if (len > (std::uint64_t{1} << 26)) throw IntegrityError("header too large: " + path.string());
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IntegrityError("truncated header: " + path.string());
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IntegrityError("malformed header in " + path.string() + ": " + e.what());
  }
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw IntegrityError("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IntegrityError("sha256 failed");
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(n)) != 1) {
      throw IntegrityError("sha256 failed");
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) throw IntegrityError("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 15]);
  }
  return out;
}

std::string hash_fields(std::span<const double> h) {
  std::string s;
  for (double v : h) s += hex_bits(v);
  return sha256_hex(s);
}

std::string spectrum_cache_key(const model::Lattice& lattice, const model::XXZParams& params, bool sectored) {
  std::ostringstream os;
  os << "spectrum/v" << kSpectrumFormatVersion << '/' << std::hex << model::kBitConventionTag << std::dec << '/'
     << model::to_string(lattice.kind) << '/' << lattice.lx << 'x' << lattice.ly << '/' << (lattice.pbc ? "pbc" : "obc")
     << '/' << hex_bits(params.jx) << '/' << hex_bits(params.jy) << '/' << hex_bits(params.jz) << '/'
     << hash_fields(params.h) << '/' << (sectored ? "sectored" : "full");
  return sha256_hex(os.str());
}

void write_spectrum(const std::filesystem::path& path, const model::Spectrum& spectrum,
                    const model::Lattice& lattice, const model::XXZParams& params) {
  const std::size_t d = spectrum.size();
  json header = {
      {"format_version", kSpectrumFormatVersion},
      {"L", spectrum.sites()},
      {"D", d},
      {"Jx", params.jx},
      {"Jy", params.jy},
      {"Jz", params.jz},
      {"h", params.h},
      {"h_hash", hash_fields(params.h)},
      {"bit_convention", model::kBitConventionTag},
      {"lattice", {{"kind", model::to_string(lattice.kind)}, {"Lx", lattice.lx}, {"Ly", lattice.ly}, {"pbc", lattice.pbc}}},
      {"sectored", spectrum.sectored()},
      {"cache_key", spectrum_cache_key(lattice, params, spectrum.sectored())},
  };
  // Write to a temporary name first so readers never see a partial file.
  auto tmp = path;
  tmp += ".partial";
  {
    auto out = open_out(tmp);
    write_header(out, kSpectrumMagic, kSpectrumFormatVersion, header);
    put_block(out, spectrum.energies());
    for (std::size_t i = 0; i < d; ++i) put<std::int16_t>(out, static_cast<std::int16_t>(spectrum.label(i)));
    std::vector<double> buf(2 * spectrum.dimension());
    for (std::size_t i = 0; i < d; ++i) {
      const auto v = spectrum.eigenvector(i);
      for (std::size_t b = 0; b < v.size(); ++b) {
        buf[2 * b] = v[b].real();
        buf[2 * b + 1] = v[b].imag();
      }
      put_block(out, buf);
    }
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_spectrum_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_header(in, kSpectrumMagic, kSpectrumFormatVersion, path);
}

model::Spectrum read_spectrum(const std::filesystem::path& path, const std::string& expected_key) {
  auto in = open_in(path);
  const json header = read_header(in, kSpectrumMagic, kSpectrumFormatVersion, path);
  int sites = 0;
  std::size_t d = 0;
  bool sectored = false;
  try {
    sites = header.at("L").get<int>();
    d = header.at("D").get<std::size_t>();
    sectored = header.at("sectored").get<bool>();
    if (!expected_key.empty() && header.at("cache_key").get<std::string>() != expected_key) {
      throw IntegrityError("spectrum cache key mismatch: " + path.string());
    }
  } catch (const json::exception& e) {
    throw IntegrityError("spectrum header incomplete in " + path.string() + ": " + e.what());
  }
  if (sites < 1 || sites > 20 || d != (std::size_t{1} << sites)) {
    throw IntegrityError("spectrum header has inconsistent dimensions: " + path.string());
  }
  std::vector<double> energies(d);
  get_block(in, energies, path);
  std::vector<int> labels(d);
  for (auto& l : labels) l = get<std::int16_t>(in, path);

  // Real parts only: the stored eigenvectors are real.
  std::vector<double> vec(2 * d);
  std::vector<double> full(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    get_block(in, vec, path);
    for (std::size_t b = 0; b < d; ++b) full[i * d + b] = vec[2 * b];
  }
  in.peek();
  if (!in.eof()) throw IntegrityError("trailing bytes in spectrum file: " + path.string());

  std::vector<model::SpectrumBlock> blocks;
  if (sectored) {
    for (const auto& sector : model::sz_sectors(sites)) {
      model::SpectrumBlock blk;
      blk.magnetization = sector.magnetization;
      blk.basis = sector.states;
      const std::size_t n = blk.basis.size();
      for (std::size_t i = 0; i < d; ++i) {
        if (labels[i] != sector.magnetization) continue;
        blk.energies.push_back(energies[i]);
        for (std::size_t r = 0; r < n; ++r) blk.vectors.push_back(full[i * d + blk.basis[r]]);
      }
      if (blk.energies.size() != n) throw IntegrityError("spectrum sector labels are inconsistent: " + path.string());
      blocks.push_back(std::move(blk));
    }
    return model::Spectrum(sites, true, std::move(blocks));
  }
  model::SpectrumBlock blk;
  blk.basis.resize(d);
  for (std::size_t b = 0; b < d; ++b) blk.basis[b] = b;
  blk.energies = energies;
  blk.vectors = std::move(full);
  blocks.push_back(std::move(blk));
  return model::Spectrum(sites, false, std::move(blocks), labels);
}

json spec_to_json(const ansatz::AnsatzSpec& spec) {
  return {
      {"variant", ansatz::to_string(spec.variant)},
      {"lattice",
       {{"kind", model::to_string(spec.lattice.kind)},
        {"Lx", spec.lattice.lx},
        {"Ly", spec.lattice.ly},
        {"pbc", spec.lattice.pbc}}},
      {"bond_dim", spec.bond_dim},
      {"width", spec.width},
      {"depth", spec.depth},
  };
}

ansatz::AnsatzSpec spec_from_json(const json& j) {
  try {
    ansatz::AnsatzSpec spec;
    spec.variant = ansatz::variant_from_string(j.at("variant").get<std::string>());
    const auto& lat = j.at("lattice");
    spec.lattice = model::build_lattice(model::lattice_kind_from_string(lat.at("kind").get<std::string>()),
                                        lat.at("Lx").get<int>(), lat.at("Ly").get<int>(), lat.at("pbc").get<bool>());
    spec.bond_dim = j.at("bond_dim").get<int>();
    spec.width = j.at("width").get<int>();
    spec.depth = j.at("depth").get<int>();
    ansatz::validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("ansatz description incomplete: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  if (cp.params.size() != ansatz::param_count(cp.spec)) throw ValidationError("checkpoint: parameter count mismatch");
  const json header = {
      {"spec", spec_to_json(cp.spec)},
      {"layout_version", ansatz::kLayoutVersion},
      {"seed", cp.seed},
      {"step", cp.step},
      {"param_count", cp.params.size()},
  };
  auto out = open_out(path);
  write_header(out, kCheckpointMagic, kCheckpointFormatVersion, header);
  put_block(out, cp.params);
  if (!out) throw ValidationError("write failed: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  auto in = open_in(path);
  const json header = read_header(in, kCheckpointMagic, kCheckpointFormatVersion, path);
  Checkpoint cp;
  try {
    if (header.at("layout_version").get<int>() != ansatz::kLayoutVersion) {
      throw IntegrityError("checkpoint layout version mismatch: " + path.string());
    }
    cp.spec = spec_from_json(header.at("spec"));
    cp.seed = header.at("seed").get<std::uint64_t>();
    cp.step = header.at("step").get<std::int64_t>();
    const auto n = header.at("param_count").get<std::size_t>();
    if (n != ansatz::param_count(cp.spec)) throw IntegrityError("checkpoint parameter count mismatch: " + path.string());
    cp.params.resize(n);
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint header incomplete in " + path.string() + ": " + e.what());
  }
  get_block(in, cp.params, path);
  in.peek();
  if (!in.eof()) throw IntegrityError("trailing bytes in checkpoint: " + path.string());
  return cp;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trajectory_row(const optimize::TrainRecord& r) {
  std::string row = std::to_string(r.step) + ',' + format_double(r.loss) + ',' + format_double(r.energy) + ',' +
                    format_double(r.infidelity) + ',';
  if (r.fit) {
    row += format_double(r.fit->beta_tilde) + ',' + format_double(r.fit->delta_beta_tilde) + ',' +
           format_double(r.fit->lambda) + ',' + format_double(r.fit->r_squared) + ',' +
           (r.fit->mse ? format_double(*r.fit->mse) : std::string()) + ',';
  } else {
    row += ",,,,,";
  }
  row += format_double(r.wall_ms);
  return row;
}

void write_trajectory(const std::filesystem::path& path, std::span<const optimize::TrainRecord> records) {
  std::string text = std::string(kTrajectoryHeader) + '\n';
  for (const auto& r : records) text += trajectory_row(r) + '\n';
  write_text(path, text);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw IntegrityError("malformed number '" + s + "' in " + path.string());
  }
  return v;
}

}  // namespace

std::vector<optimize::TrainRecord> read_trajectory(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader) {
    throw IntegrityError("unexpected trajectory header in " + path.string());
  }
  std::vector<optimize::TrainRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw IntegrityError("trajectory row has " + std::to_string(f.size()) + " fields in " + path.string());
    optimize::TrainRecord r;
    r.step = static_cast<std::int64_t>(parse_double(f[0], path));
    r.loss = parse_double(f[1], path);
    r.energy = parse_double(f[2], path);
    r.infidelity = parse_double(f[3], path);
    if (!f[4].empty()) {
      spectral::FitResult fit;
      fit.beta_tilde = parse_double(f[4], path);
      fit.delta_beta_tilde = parse_double(f[5], path);
      fit.lambda = parse_double(f[6], path);
      fit.r_squared = parse_double(f[7], path);
      if (!f[8].empty()) fit.mse = parse_double(f[8], path);
      r.fit = fit;
    }
    r.wall_ms = parse_double(f[9], path);
    out.push_back(std::move(r));
  }
  return out;
}

void write_scatter(const std::filesystem::path& path, const spectral::Decomposition& decomp,
                   std::span<const std::size_t> used_indices) {
  std::string text = "epsilon,weight,sector,used_in_fit\n";
  for (const auto& e : decomp.entries) {
    const bool used = std::binary_search(used_indices.begin(), used_indices.end(), e.index);
    text += format_double(e.energy) + ',' + format_double(e.weight) + ',' +
            (e.sector == model::kUnlabeled ? std::string() : std::to_string(e.sector)) + ',' + (used ? "1" : "0") +
            '\n';
  }
  write_text(path, text);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace efftemp::io
