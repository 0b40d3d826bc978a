#include "hybasis/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hybasis/errors.hpp"

namespace hybasis {

using nlohmann::json;

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void write_le(const fs::path& file, std::span<const T> values) {
  std::vector<unsigned char> buf(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T v = to_little(values[i]);
    std::memcpy(buf.data() + i * sizeof(T), &v, sizeof(T));
  }
  raw::write_bytes(file, buf);
}

template <typename T>
std::vector<T> read_le(const fs::path& file, std::size_t expected_count) {
  const auto bytes = raw::read_bytes(file);
  if (bytes.size() != expected_count * sizeof(T)) {
    std::ostringstream os;
    os << "payload size mismatch in " << file.string() << ": expected " << expected_count * sizeof(T)
       << " bytes, found " << bytes.size();
    throw IoError(os.str());
  }
  std::vector<T> out(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = to_little(v);
  }
  return out;
}

json read_json(const fs::path& file) {
  try {
    return json::parse(read_text(file));
  } catch (const json::exception& e) {
    throw IoError("malformed header " + file.string() + ": " + e.what());
  }
}

Dims dims_from_json(const json& h, const fs::path& file) {
  try {
    const auto d = h.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw IoError("dims must have 3 entries in " + file.string());
    Dims dims{d[0], d[1], d[2]};
    if (!dims.valid()) throw IoError("non-positive dims in " + file.string());
    return dims;
  } catch (const json::exception& e) {
    throw IoError("bad dims in " + file.string() + ": " + e.what());
  }
}

void check_field(const json& h, const char* key, const std::string& expected, const fs::path& file) {
  if (!h.contains(key) || h.at(key).get<std::string>() != expected)
    throw IoError(std::string("header field '") + key + "' must be '" + expected + "' in " + file.string());
}

}  // namespace

fs::path strip_suffix(const fs::path& path, const std::string& suffix) {
  const std::string s = path.string();
  if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0)
    return fs::path(s.substr(0, s.size() - suffix.size()));
  return path;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace raw {

std::vector<unsigned char> read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& file, std::span<const unsigned char> bytes) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + file.string());
}

void write_f32(const fs::path& file, std::span<const double> values) {
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) f[i] = static_cast<float>(values[i]);
  write_le<float>(file, f);
}

std::vector<float> read_f32(const fs::path& file, std::size_t n) { return read_le<float>(file, n); }

void write_f64(const fs::path& file, std::span<const double> values) { write_le<double>(file, values); }

std::vector<double> read_f64(const fs::path& file, std::size_t n) { return read_le<double>(file, n); }

void write_i32(const fs::path& file, std::span<const std::int32_t> values) {
  write_le<std::int32_t>(file, values);
}

std::vector<std::int32_t> read_i32(const fs::path& file, std::size_t n) {
  return read_le<std::int32_t>(file, n);
}

}  // namespace raw

void save_volume(const Volume4D& vol, const fs::path& path) {
  const fs::path stem = strip_suffix(path, ".vol.json");
  const std::string name = stem.filename().string();
  const auto& d = vol.dims();

  json h;
  h["format"] = "hybasis-volume";
  h["version"] = 1;
  h["dims"] = {d.x, d.y, d.z};
  h["n_time"] = vol.n_time();
  h["dtype"] = "float32";
  h["order"] = "x-fastest";
  h["endianness"] = "little";
  h["payload"] = name + ".vol.raw";

  // Frame-major: the payload is T consecutive 3D frames.
  const Eigen::MatrixXd frames = vol.values().transpose();  // Nv x T, column = frame
  raw::write_f32(fs::path(stem.string() + ".vol.raw"),
                 std::span<const double>(frames.data(), static_cast<std::size_t>(frames.size())));
  if (vol.mask()) {
    std::vector<unsigned char> m(vol.mask()->size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = (*vol.mask())[i] ? 1 : 0;
    raw::write_bytes(fs::path(stem.string() + ".vol.mask"), m);
    h["mask"] = name + ".vol.mask";
  }
  write_text(fs::path(stem.string() + ".vol.json"), h.dump(2) + "\n");
}

Volume4D load_volume(const fs::path& path) {
  const fs::path stem = strip_suffix(path, ".vol.json");
  const fs::path header = stem.string() + ".vol.json";
  const json h = read_json(header);
  check_field(h, "dtype", "float32", header);
  check_field(h, "order", "x-fastest", header);
  if (h.contains("endianness")) check_field(h, "endianness", "little", header);
  const Dims dims = dims_from_json(h, header);
  int n_time = 0;
  try {
    n_time = h.at("n_time").get<int>();
  } catch (const json::exception& e) {
    throw IoError("bad n_time in " + header.string());
  }
  if (n_time <= 0) throw IoError("n_time must be positive in " + header.string());

  const fs::path dir = header.parent_path();
  const std::string payload = h.value("payload", stem.filename().string() + ".vol.raw");
  const std::size_t nv = dims.count();
  const auto f = raw::read_f32(dir / payload, nv * static_cast<std::size_t>(n_time));

  Eigen::MatrixXd values(n_time, static_cast<Eigen::Index>(nv));
  for (int t = 0; t < n_time; ++t)
    for (std::size_t v = 0; v < nv; ++v)
      values(t, static_cast<Eigen::Index>(v)) = static_cast<double>(f[static_cast<std::size_t>(t) * nv + v]);

  std::optional<std::vector<bool>> mask;
  if (h.contains("mask")) {
    const auto bytes = raw::read_bytes(dir / h.at("mask").get<std::string>());
    if (bytes.size() != nv) throw IoError("mask payload size mismatch in " + header.string());
    mask.emplace(nv);
    for (std::size_t i = 0; i < nv; ++i) (*mask)[i] = bytes[i] != 0;
  }
  Volume4D vol(dims, std::move(values), std::move(mask));
  vol.validate();
  return vol;
}

void save_parcellation(const Parcellation& parc, const fs::path& path) {
  const fs::path stem = strip_suffix(path, ".parc.json");
  const auto& d = parc.dims();
  json h;
  h["format"] = "hybasis-parcellation";
  h["version"] = 1;
  h["dims"] = {d.x, d.y, d.z};
  h["dtype"] = "int32";
  h["order"] = "x-fastest";
  h["endianness"] = "little";
  h["payload"] = stem.filename().string() + ".parc.raw";
  h["roi_ids"] = parc.roi_ids();
  raw::write_i32(fs::path(stem.string() + ".parc.raw"), parc.labels());
  write_text(fs::path(stem.string() + ".parc.json"), h.dump(2) + "\n");
}

Parcellation load_parcellation(const fs::path& path, std::size_t min_roi_size) {
  const fs::path stem = strip_suffix(path, ".parc.json");
  const fs::path header = stem.string() + ".parc.json";
  const json h = read_json(header);
  check_field(h, "dtype", "int32", header);
  check_field(h, "order", "x-fastest", header);
  const Dims dims = dims_from_json(h, header);
  const std::string payload = h.value("payload", stem.filename().string() + ".parc.raw");
  auto labels = raw::read_i32(header.parent_path() / payload, dims.count());
  return Parcellation(dims, std::move(labels), min_roi_size);
}

}  // namespace hybasis
