#include <json.hpp>

#include "hybasis/errors.hpp"
#include "hybasis/gibbs.hpp"
#include "hybasis/io.hpp"

namespace hybasis {

using nlohmann::json;

void save_draws(const PosteriorDraws& draws, const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".draws.json");
  json h;
  h["format"] = "hybasis-draws";
  h["version"] = 1;
  h["n_draws"] = draws.n_draws;
  h["n_predictors"] = draws.n_predictors;
  h["n_series"] = draws.n_series;
  h["dtype"] = "float64";
  h["endianness"] = "little";
  h["layout"] = {"b_star[draw][predictor][series]", "psi[draw][series]", "alpha[series]"};
  h["payload"] = stem.filename().string() + ".draws.raw";
  const auto& sp = draws.spec;
  h["model"] = {{"k_v", sp.k_v},       {"a0", sp.a0},     {"b0", sp.b0},
                {"n_iter", sp.n_iter}, {"burn_in", sp.burn_in}, {"thin", sp.thin},
                {"seed", sp.seed},     {"prior_only", sp.prior_only}};

  std::vector<double> payload;
  payload.reserve(draws.b_star.size() + static_cast<std::size_t>(draws.psi.size() + draws.alpha.size()));
  payload.insert(payload.end(), draws.b_star.begin(), draws.b_star.end());
  for (int d = 0; d < draws.n_draws; ++d)
    for (int s = 0; s < draws.n_series; ++s) payload.push_back(draws.psi(d, s));
  payload.insert(payload.end(), draws.alpha.data(), draws.alpha.data() + draws.alpha.size());

  write_text(stem.string() + ".draws.json", h.dump(2) + "\n");
  raw::write_f64(stem.string() + ".draws.raw", payload);
}

PosteriorDraws load_draws(const std::filesystem::path& path) {
  const auto stem = strip_suffix(path, ".draws.json");
  json h;
  try {
    h = json::parse(read_text(stem.string() + ".draws.json"));
  } catch (const json::exception& e) {
    throw IoError("malformed draws header: " + std::string(e.what()));
  }
  PosteriorDraws out;
  try {
    if (h.at("format").get<std::string>() != "hybasis-draws") throw IoError("not a draws archive: " + path.string());
    out.n_draws = h.at("n_draws").get<int>();
    out.n_predictors = h.at("n_predictors").get<int>();
    out.n_series = h.at("n_series").get<int>();
    const auto& m = h.at("model");
    out.spec.k_v = m.at("k_v").get<double>();
    out.spec.a0 = m.at("a0").get<double>();
    out.spec.b0 = m.at("b0").get<double>();
    out.spec.n_iter = m.at("n_iter").get<int>();
    out.spec.burn_in = m.at("burn_in").get<int>();
    out.spec.thin = m.at("thin").get<int>();
    out.spec.seed = m.at("seed").get<std::uint64_t>();
    out.spec.prior_only = m.at("prior_only").get<bool>();
  } catch (const json::exception& e) {
    throw IoError("bad draws header field: " + std::string(e.what()));
  }
  if (out.n_draws < 0 || out.n_predictors < 0 || out.n_series < 0) throw IoError("negative extent in draws header");
  const auto d = static_cast<std::size_t>(out.n_draws), p = static_cast<std::size_t>(out.n_predictors),
             s = static_cast<std::size_t>(out.n_series);
  const auto payload = raw::read_f64(stem.string() + ".draws.raw", d * p * s + d * s + s);
  out.b_star.assign(payload.begin(), payload.begin() + static_cast<std::ptrdiff_t>(d * p * s));
  out.psi.resize(out.n_draws, out.n_series);
  std::size_t pos = d * p * s;
  for (int i = 0; i < out.n_draws; ++i)
    for (int j = 0; j < out.n_series; ++j) out.psi(i, j) = payload[pos++];
  out.alpha.resize(out.n_series);
  for (int j = 0; j < out.n_series; ++j) out.alpha[j] = payload[pos++];
  return out;
}

}  // namespace hybasis
