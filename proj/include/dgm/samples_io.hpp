#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgm/gibbs.hpp"

namespace dgm {

// On-disk layout of a samples directory: one long-format CSV per parameter
// block (chain, draw, index, value; 1-based draw and index, index runs over
// the block layout documented in meta.json) plus deviance.csv and meta.json.

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_block_csv(const std::string& path,
                            const std::vector<std::vector<double>>& block,
                            std::size_t block_size) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "chain,draw,index,value\n";
  for (std::size_t c = 0; c < block.size(); ++c) {
    const auto& data = block[c];
    const std::size_t keep = data.size() / block_size;
    for (std::size_t m = 0; m < keep; ++m)
      for (std::size_t t = 0; t < block_size; ++t)
        out << (c + 1) << ',' << (m + 1) << ',' << (t + 1) << ','
            << fmt_double(data[m * block_size + t]) << '\n';
  }
}

inline void write_z_csv(const std::string& path, const std::vector<std::vector<long>>& block,
                        std::size_t block_size) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write '" + path + "'");
  out << "chain,draw,index,value\n";
  for (std::size_t c = 0; c < block.size(); ++c) {
    const auto& data = block[c];
    const std::size_t keep = block_size == 0 ? 0 : data.size() / block_size;
    for (std::size_t m = 0; m < keep; ++m)
      for (std::size_t t = 0; t < block_size; ++t)
        out << (c + 1) << ',' << (m + 1) << ',' << (t + 1) << ','
            << data[m * block_size + t] << '\n';
  }
}

struct BlockRow {
  int chain;
  long draw, index;
  std::string value;
};

inline std::vector<BlockRow> read_block_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty file '" + path + "'");
  std::vector<BlockRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw input_error("malformed row in '" + path + "'");
    rows.push_back({static_cast<int>(parse_long(f[0], "chain")), parse_long(f[1], "draw"),
                    parse_long(f[2], "index"), f[3]});
  }
  return rows;
}

inline void read_block_csv(const std::string& path, std::vector<std::vector<double>>& block,
                           int chains, long keep, std::size_t block_size) {
  block.assign(chains, std::vector<double>(static_cast<std::size_t>(keep) * block_size));
  for (const auto& r : read_block_rows(path)) {
    if (r.chain < 1 || r.chain > chains || r.draw < 1 || r.draw > keep || r.index < 1 ||
        r.index > static_cast<long>(block_size))
      throw input_error("out-of-range row in '" + path + "'");
    block[r.chain - 1][static_cast<std::size_t>(r.draw - 1) * block_size + (r.index - 1)] =
        parse_double(r.value, "value");
  }
}

inline void read_z_csv(const std::string& path, std::vector<std::vector<long>>& block,
                       int chains, long keep, std::size_t block_size) {
  block.assign(chains, std::vector<long>(static_cast<std::size_t>(keep) * block_size));
  for (const auto& r : read_block_rows(path)) {
    if (r.chain < 1 || r.chain > chains || r.draw < 1 || r.draw > keep || r.index < 1 ||
        r.index > static_cast<long>(block_size))
      throw input_error("out-of-range row in '" + path + "'");
    block[r.chain - 1][static_cast<std::size_t>(r.draw - 1) * block_size + (r.index - 1)] =
        parse_long(r.value, "value");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const TransformSpec& t) {
  return {{"divisor", t.divisor}, {"power", t.power}, {"enabled", t.enabled}};
}

inline TransformSpec transform_from_json(const nlohmann::json& j) {
  TransformSpec t;
  t.divisor = j.at("divisor").get<double>();
  t.power = j.at("power").get<double>();
  t.enabled = j.at("enabled").get<bool>();
  return t;
}

inline nlohmann::json to_json(const ModelSpec& spec) {
  return {{"p", spec.p},
          {"a_alpha0", spec.a_alpha0},
          {"b_alpha0", spec.b_alpha0},
          {"a_beta0", spec.a_beta0},
          {"b_beta0", spec.b_beta0},
          {"a_gamma0", spec.a_gamma0},
          {"b_gamma0", spec.b_gamma0},
          {"transform", to_json(spec.transform)},
          {"zero_floor", spec.zero_floor}};
}

inline ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.p = j.at("p").get<int>();
  spec.a_alpha0 = j.at("a_alpha0").get<double>();
  spec.b_alpha0 = j.at("b_alpha0").get<double>();
  spec.a_beta0 = j.at("a_beta0").get<double>();
  spec.b_beta0 = j.at("b_beta0").get<double>();
  spec.a_gamma0 = j.at("a_gamma0").get<double>();
  spec.b_gamma0 = j.at("b_gamma0").get<double>();
  spec.transform = transform_from_json(j.at("transform"));
  spec.zero_floor = j.at("zero_floor").get<double>();
  return spec;
}

inline nlohmann::json to_json(const RunConfig& run) {
  return {{"chains", run.chains},   {"burn_in", run.burn_in},
          {"keep", run.keep},       {"thin", run.thin},
          {"seed", run.seed},       {"slice_width", run.slice_width},
          {"tail_tol", run.tail_tol}, {"threads", run.threads}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig run;
  run.chains = j.at("chains").get<int>();
  run.burn_in = j.at("burn_in").get<long>();
  run.keep = j.at("keep").get<long>();
  run.thin = j.at("thin").get<int>();
  run.seed = j.at("seed").get<std::uint64_t>();
  run.slice_width = j.at("slice_width").get<double>();
  run.tail_tol = j.at("tail_tol").get<double>();
  run.threads = j.at("threads").get<int>();
  return run;
}

inline void save_samples(const PosteriorSamples& s, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::size_t nk = static_cast<std::size_t>(s.n) * s.K;
  detail::write_block_csv(dir + "/alpha.csv", s.alpha, nk);
  detail::write_block_csv(dir + "/beta.csv", s.beta, nk);
  detail::write_block_csv(dir + "/gamma.csv", s.gamma, nk);
  detail::write_block_csv(dir + "/a_alpha.csv", s.a_alpha, s.n);
  detail::write_block_csv(dir + "/b_alpha.csv", s.b_alpha, s.n);
  detail::write_block_csv(dir + "/a_beta.csv", s.a_beta, s.n);
  detail::write_block_csv(dir + "/b_beta.csv", s.b_beta, s.n);
  detail::write_block_csv(dir + "/a_gamma.csv", s.a_gamma, s.n);
  detail::write_block_csv(dir + "/b_gamma.csv", s.b_gamma, s.n);
  detail::write_z_csv(dir + "/z.csv", s.z, s.z_cells.size());
  detail::write_block_csv(dir + "/deviance.csv", s.deviance, 1);

  std::vector<double> all_dev;
  for (const auto& c : s.deviance) all_dev.insert(all_dev.end(), c.begin(), c.end());
  nlohmann::json z_cells = nlohmann::json::array();
  for (const auto& c : s.z_cells) z_cells.push_back({{"i", c.i}, {"j", c.j}, {"k", c.k}});
  nlohmann::json meta = {
      {"n", s.n},
      {"K", s.K},
      {"chains", s.chains()},
      {"model", to_json(s.spec)},
      {"run", to_json(s.run)},
      {"seed", s.run.seed},
      {"scale", s.spec.transform.enabled ? "transformed" : "original"},
      {"z_cells", z_cells},
      {"deviance", {{"mean", mean(all_dev)},
                    {"min", *std::min_element(all_dev.begin(), all_dev.end())},
                    {"max", *std::max_element(all_dev.begin(), all_dev.end())}}},
      {"wall_seconds", s.wall_seconds},
      {"layout", "index = (k-1)*n + i for alpha, (k-1)*n + j for beta/gamma, "
                 "hyper blocks indexed by i or j, z indexed by position in z_cells"}};
  std::ofstream out(dir + "/meta.json");
  if (!out) throw input_error("cannot write '" + dir + "/meta.json'");
  out << meta.dump(2) << '\n';
}

inline PosteriorSamples load_samples(const std::string& dir) {
  std::ifstream in(dir + "/meta.json");
  if (!in) throw input_error("cannot open '" + dir + "/meta.json'");
  nlohmann::json meta = nlohmann::json::parse(in);
  PosteriorSamples s;
  s.n = meta.at("n").get<int>();
  s.K = meta.at("K").get<int>();
  s.spec = model_spec_from_json(meta.at("model"));
  s.run = run_config_from_json(meta.at("run"));
  s.wall_seconds = meta.value("wall_seconds", 0.0);
  for (const auto& c : meta.at("z_cells"))
    s.z_cells.push_back({c.at("i").get<int>(), c.at("j").get<int>(), c.at("k").get<int>()});
  const int chains = meta.at("chains").get<int>();
  const long keep = s.run.keep;
  const std::size_t nk = static_cast<std::size_t>(s.n) * s.K;
  detail::read_block_csv(dir + "/alpha.csv", s.alpha, chains, keep, nk);
  detail::read_block_csv(dir + "/beta.csv", s.beta, chains, keep, nk);
  detail::read_block_csv(dir + "/gamma.csv", s.gamma, chains, keep, nk);
  detail::read_block_csv(dir + "/a_alpha.csv", s.a_alpha, chains, keep, s.n);
  detail::read_block_csv(dir + "/b_alpha.csv", s.b_alpha, chains, keep, s.n);
  detail::read_block_csv(dir + "/a_beta.csv", s.a_beta, chains, keep, s.n);
  detail::read_block_csv(dir + "/b_beta.csv", s.b_beta, chains, keep, s.n);
  detail::read_block_csv(dir + "/a_gamma.csv", s.a_gamma, chains, keep, s.n);
  detail::read_block_csv(dir + "/b_gamma.csv", s.b_gamma, chains, keep, s.n);
  detail::read_z_csv(dir + "/z.csv", s.z, chains, keep, s.z_cells.size());
  detail::read_block_csv(dir + "/deviance.csv", s.deviance, chains, keep, 1);
  return s;
}

}  // namespace dgm
