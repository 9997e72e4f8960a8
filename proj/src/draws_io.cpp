#include "lbcf/draws_io.h"

#include <fstream>
#include <string>

#include "lbcf/errors.h"

namespace lbcf {

using nlohmann::json;

namespace {

json chain_to_json(const ChainInfo& c) {
  json props = json::array();
  for (const auto& m : c.propensity) props.push_back(m.to_json());
  json blocks = json::array();
  for (const auto& b : c.blocks)
    blocks.push_back({{"label", b.label}, {"proposed", b.proposed}, {"accepted", b.accepted}});
  return {{"chain", c.chain},
          {"replicate", c.replicate},
          {"seed", c.seed},
          {"standardizer", {{"mean", c.standardizer.mean}, {"sd", c.standardizer.sd}}},
          {"propensity", props},
          {"propensity_scores", c.propensity_scores},
          {"blocks", blocks}};
}

ChainInfo chain_from_json(const json& j) {
  ChainInfo c;
  c.chain = j.at("chain").get<int>();
  c.replicate = j.at("replicate").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.standardizer.mean = j.at("standardizer").at("mean").get<double>();
  c.standardizer.sd = j.at("standardizer").at("sd").get<double>();
  for (const auto& m : j.at("propensity")) c.propensity.push_back(PropensityModel::from_json(m));
  c.propensity_scores = j.at("propensity_scores").get<std::vector<std::vector<double>>>();
  for (const auto& b : j.at("blocks"))
    c.blocks.push_back({b.at("label").get<std::string>(), b.at("proposed").get<std::size_t>(),
                        b.at("accepted").get<std::size_t>()});
  return c;
}

json draw_to_json(const Draw& d) {
  json j{{"chain", d.chain}, {"iter", d.iter}, {"sigma2", d.sigma2},
         {"mu", d.mu},       {"delta", d.delta}, {"tau", d.tau},
         {"z", d.z}};
  if (!d.forests.empty()) {
    json forests = json::array();
    for (const auto& block : d.forests) {
      json trees = json::array();
      for (const auto& t : block) trees.push_back(tree_to_json(t));
      forests.push_back(std::move(trees));
    }
    j["forests"] = std::move(forests);
  }
  if (!d.test_mu.empty()) {
    j["test_mu"] = d.test_mu;
    j["test_delta"] = d.test_delta;
    j["test_tau"] = d.test_tau;
  }
  return j;
}

Draw draw_from_json(const json& j) {
  Draw d;
  d.chain = j.at("chain").get<int>();
  d.iter = j.at("iter").get<int>();
  d.sigma2 = j.at("sigma2").get<double>();
  d.mu = j.at("mu").get<std::vector<double>>();
  d.delta = j.at("delta").get<std::vector<std::vector<double>>>();
  d.tau = j.at("tau").get<std::vector<std::vector<double>>>();
  d.z = j.at("z").get<std::vector<std::vector<std::int8_t>>>();
  if (j.contains("forests")) {
    for (const auto& block : j.at("forests")) {
      std::vector<Tree> trees;
      trees.reserve(block.size());
      for (const auto& t : block) trees.push_back(tree_from_json(t));
      d.forests.push_back(std::move(trees));
    }
  }
  if (j.contains("test_mu")) {
    d.test_mu = j.at("test_mu").get<std::vector<double>>();
    d.test_delta = j.at("test_delta").get<std::vector<std::vector<double>>>();
    d.test_tau = j.at("test_tau").get<std::vector<std::vector<double>>>();
  }
  return d;
}

}  // namespace

void write_draws(std::ostream& out, const PosteriorDraws& draws) {
  json subjects = json::array();
  for (std::size_t i = 0; i < draws.ids.size(); ++i)
    subjects.push_back({{"id", draws.ids[i]}, {"weight", draws.weights[i]}, {"last_wave", draws.last_wave[i]}});
  json chains = json::array();
  for (const auto& c : draws.chains) chains.push_back(chain_to_json(c));
  const json header{{"format", kDrawFormat},
                    {"version", kDrawFormatVersion},
                    {"config", draws.config},
                    {"hyper", to_json(draws.hp)},
                    {"waves", draws.waves},
                    {"schema", to_json(draws.schema)},
                    {"subjects", subjects},
                    {"chains", chains},
                    {"draws", draws.draws.size()}};
  out << header.dump() << '\n';
  for (const auto& d : draws.draws) out << draw_to_json(d).dump() << '\n';
}

void write_draws_file(const std::filesystem::path& path, const PosteriorDraws& draws) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path.string());
  write_draws(f, draws);
  if (!f) throw ValidationError("error while writing " + path.string());
}

PosteriorDraws read_draws(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty draw file");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("draw file header is not JSON: ") + e.what(), 1);
  }
  if (!header.is_object() || header.value("format", "") != kDrawFormat)
    throw ParseError("not an lbcf draw file", 1);
  if (header.at("version").get<int>() != kDrawFormatVersion)
    throw ParseError("unsupported draw file version " + header.at("version").dump(), 1);
  PosteriorDraws d;
  try {
    d.config = header.at("config");
    d.hp = hyper_from_json(header.at("hyper"));
    d.waves = header.at("waves").get<int>();
    d.schema = schema_from_json(header.at("schema"));
    for (const auto& s : header.at("subjects")) {
      d.ids.push_back(s.at("id").get<std::string>());
      d.weights.push_back(s.at("weight").get<double>());
      d.last_wave.push_back(s.at("last_wave").get<int>());
    }
    for (const auto& c : header.at("chains")) d.chains.push_back(chain_from_json(c));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed draw file header: ") + e.what(), 1);
  }
  const auto expected = header.at("draws").get<std::size_t>();
  d.draws.reserve(expected);
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    try {
      d.draws.push_back(draw_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed draw record: ") + e.what(), row);
    }
  }
  if (d.draws.size() != expected)
    throw ParseError("draw file truncated: expected " + std::to_string(expected) + " draws, found " +
                     std::to_string(d.draws.size()));
  return d;
}

PosteriorDraws read_draws_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open draw file " + path.string());
  return read_draws(f);
}

}  // namespace lbcf
