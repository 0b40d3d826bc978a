#include <numeric>

#include <json.hpp>

#include "hybasis/errors.hpp"
#include "hybasis/io.hpp"
#include "hybasis/spatial_basis.hpp"

namespace hybasis {

using nlohmann::json;

namespace {

void append(std::vector<double>& out, const Eigen::MatrixXd& m) {
  // column-major, matching Eigen's storage
  out.insert(out.end(), m.data(), m.data() + m.size());
}

void append(std::vector<double>& out, const Eigen::VectorXd& v) { out.insert(out.end(), v.data(), v.data() + v.size()); }

class Cursor {
 public:
  explicit Cursor(const std::vector<double>& data) : data_(data) {}
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    take(static_cast<std::size_t>(rows * cols));
    return Eigen::Map<const Eigen::MatrixXd>(data_.data() + pos_ - rows * cols, rows, cols);
  }
  Eigen::VectorXd vector(Eigen::Index n) {
    take(static_cast<std::size_t>(n));
    return Eigen::Map<const Eigen::VectorXd>(data_.data() + pos_ - n, n);
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void take(std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError("basis payload shorter than header declares");
    pos_ += n;
  }
  const std::vector<double>& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_basis(const CompositeBasis& basis, const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".basis.json");
  json h;
  h["format"] = "hybasis-basis";
  h["version"] = 1;
  h["mode"] = to_string(basis.mode());
  h["dims"] = {basis.dims().x, basis.dims().y, basis.dims().z};
  h["n_components"] = basis.n_components();
  h["dtype"] = "float64";
  h["endianness"] = "little";
  h["layout"] = "column-major";
  h["payload"] = stem.filename().string() + ".basis.raw";
  h["index_payload"] = stem.filename().string() + ".basis.idx.raw";

  std::vector<double> payload;
  std::vector<std::int32_t> index;
  if (const auto& local = basis.local()) {
    json l;
    l["threshold"] = local->threshold;
    l["roi_ids"] = local->roi_ids;
    std::vector<std::size_t> sizes, retained, n_eig;
    for (std::size_t k = 0; k < local->n_rois(); ++k) {
      sizes.push_back(local->voxels[k].size());
      retained.push_back(static_cast<std::size_t>(local->loadings[k].cols()));
      n_eig.push_back(static_cast<std::size_t>(local->eigenvalues[k].size()));
      append(payload, local->loadings[k]);
      append(payload, local->eigenvalues[k]);
      for (auto v : local->voxels[k]) index.push_back(static_cast<std::int32_t>(v));
    }
    l["sizes"] = sizes;
    l["retained"] = retained;
    l["n_eigenvalues"] = n_eig;
    h["local"] = l;
  } else {
    for (auto v : basis.analysed_voxels()) index.push_back(static_cast<std::int32_t>(v));
  }
  if (const auto& global = basis.global()) {
    json g;
    g["threshold"] = global->threshold;
    g["rows"] = global->loadings.rows();
    g["retained"] = global->retained();
    g["n_eigenvalues"] = global->eigenvalues.size();
    append(payload, global->loadings);
    append(payload, global->eigenvalues);
    h["global"] = g;
  }
  h["payload_count"] = payload.size();
  h["index_count"] = index.size();

  write_text(stem.string() + ".basis.json", h.dump(2) + "\n");
  raw::write_f64(stem.string() + ".basis.raw", payload);
  raw::write_i32(stem.string() + ".basis.idx.raw", index);
}

CompositeBasis load_basis(const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".basis.json");
  json h;
  try {
    h = json::parse(read_text(stem.string() + ".basis.json"));
  } catch (const json::exception& e) {
    throw IoError("malformed basis header: " + std::string(e.what()));
  }
  try {
    if (h.at("format").get<std::string>() != "hybasis-basis") throw IoError("not a basis archive: " + path.string());
    const auto mode = parse_basis_mode(h.at("mode").get<std::string>());
    const auto d = h.at("dims").get<std::vector<int>>();
    if (d.size() != 3) throw IoError("basis dims must have 3 entries");
    const Dims dims{d[0], d[1], d[2]};
    const auto payload = raw::read_f64(stem.string() + ".basis.raw", h.at("payload_count").get<std::size_t>());
    const auto index = raw::read_i32(stem.string() + ".basis.idx.raw", h.at("index_count").get<std::size_t>());
    Cursor cur(payload);

    std::optional<LocalBasis> local;
    std::vector<std::size_t> analysed;
    if (h.contains("local")) {
      const auto& l = h.at("local");
      LocalBasis lb;
      lb.threshold = l.at("threshold").get<double>();
      lb.roi_ids = l.at("roi_ids").get<std::vector<std::int32_t>>();
      const auto sizes = l.at("sizes").get<std::vector<std::size_t>>();
      const auto retained = l.at("retained").get<std::vector<std::size_t>>();
      const auto n_eig = l.at("n_eigenvalues").get<std::vector<std::size_t>>();
      std::size_t pos = 0;
      for (std::size_t k = 0; k < lb.roi_ids.size(); ++k) {
        lb.loadings.push_back(
            cur.matrix(static_cast<Eigen::Index>(sizes.at(k)), static_cast<Eigen::Index>(retained.at(k))));
        lb.eigenvalues.push_back(cur.vector(static_cast<Eigen::Index>(n_eig.at(k))));
        std::vector<std::size_t> vox;
        for (std::size_t j = 0; j < sizes[k]; ++j) vox.push_back(static_cast<std::size_t>(index.at(pos++)));
        lb.voxels.push_back(std::move(vox));
      }
      local = std::move(lb);
    } else {
      for (auto v : index) analysed.push_back(static_cast<std::size_t>(v));
    }
    std::optional<GlobalBasis> global;
    if (h.contains("global")) {
      const auto& g = h.at("global");
      GlobalBasis gb;
      gb.threshold = g.at("threshold").get<double>();
      gb.loadings = cur.matrix(g.at("rows").get<Eigen::Index>(), g.at("retained").get<Eigen::Index>());
      gb.eigenvalues = cur.vector(g.at("n_eigenvalues").get<Eigen::Index>());
      global = std::move(gb);
    }
    if (!cur.done()) throw IoError("basis payload longer than header declares");
    return CompositeBasis(mode, dims, std::move(local), std::move(global), std::move(analysed));
  } catch (const json::exception& e) {
    throw IoError("bad basis header field: " + std::string(e.what()));
  }
}

}  // namespace hybasis
