#include "risbin/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "risbin/errors.hpp"

namespace risbin {

using nlohmann::json;

const NetworkState& Checkpoint::network(const std::string& name) const {
  for (const auto& n : networks) {
    if (n.name == name) return n;
  }
  throw ConfigError("checkpoint has no network named '" + name + "'");
}

OptimizerSnapshot snapshot(const nn::Optimizer& opt) {
  return {opt.config(), opt.steps(), opt.first_moment(), opt.second_moment()};
}

nn::Optimizer restore_optimizer(const OptimizerSnapshot& snap) {
  nn::Optimizer opt(snap.config);
  opt.restore(snap.steps, snap.first_moment, snap.second_moment);
  return opt;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

json spec_to_json(const nn::NetworkSpec& spec) {
  json j;
  j["input_dim"] = spec.input_dim;
  j["layers"] = json::array();
  for (const auto& l : spec.layers) {
    j["layers"].push_back({{"kind", nn::to_string(l.kind)},
                           {"units", l.units},
                           {"kernel_width", l.kernel_width},
                           {"drop_prob", l.drop_prob},
                           {"activation", nn::to_string(l.activation)}});
  }
  j["heads"] = json::array();
  for (const auto& h : spec.heads) {
    j["heads"].push_back({{"name", h.name}, {"output_dim", h.output_dim}, {"activation", nn::to_string(h.activation)}});
  }
  return j;
}

nn::NetworkSpec spec_from_json(const json& j) {
  nn::NetworkSpec spec;
  spec.input_dim = j.at("input_dim").get<int>();
  for (const auto& l : j.at("layers")) {
    nn::LayerSpec ls;
    ls.kind = nn::layer_kind_from_string(l.at("kind").get<std::string>());
    ls.units = l.at("units").get<int>();
    ls.kernel_width = l.at("kernel_width").get<int>();
    ls.drop_prob = l.at("drop_prob").get<double>();
    ls.activation = nn::activation_from_string(l.at("activation").get<std::string>());
    spec.layers.push_back(ls);
  }
  for (const auto& h : j.at("heads")) {
    spec.heads.push_back({h.at("name").get<std::string>(), h.at("output_dim").get<int>(),
                          nn::activation_from_string(h.at("activation").get<std::string>())});
  }
  spec.validate();
  return spec;
}

json shapes_to_json(const nn::ParamSet& p) {
  json w = json::array();
  for (const auto& m : p.weights) w.push_back({m.rows(), m.cols()});
  json b = json::array();
  for (const auto& v : p.biases) b.push_back(v.size());
  return {{"weights", w}, {"biases", b}};
}

nn::ParamSet shaped_from_json(const json& j) {
  nn::ParamSet p;
  for (const auto& w : j.at("weights")) p.weights.emplace_back(w.at(0).get<Eigen::Index>(), w.at(1).get<Eigen::Index>());
  for (const auto& b : j.at("biases")) p.biases.emplace_back(b.get<Eigen::Index>());
  return p;
}

// Arrays are written row-major so the payload does not depend on Eigen's
// storage order.
void write_set(std::ostream& out, const nn::ParamSet& p) {
  for (const auto& m : p.weights) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double x = m(r, c);
        out.write(reinterpret_cast<const char*>(&x), sizeof x);
      }
  }
  for (const auto& v : p.biases) out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_set(std::istream& in, nn::ParamSet& p) {
  for (auto& m : p.weights) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double x = 0.0;
        in.read(reinterpret_cast<char*>(&x), sizeof x);
        m(r, c) = x;
      }
  }
  for (auto& v : p.biases) in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw ConfigError("checkpoint payload truncated");
}

std::string_view kind_name(nn::OptimizerKind k) { return k == nn::OptimizerKind::sgd ? "sgd" : "adam"; }

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  json meta;
  meta["agent"] = ckpt.agent;
  meta["step"] = ckpt.step;
  meta["networks"] = json::array();
  for (const auto& n : ckpt.networks) {
    json jn;
    jn["name"] = n.name;
    jn["spec"] = spec_to_json(n.spec);
    jn["mode"] = n.params.mode == nn::Mode::train ? "train" : "eval";
    jn["params"] = shapes_to_json(n.params.values);
    if (n.optimizer) {
      const auto& o = *n.optimizer;
      json jo{{"kind", kind_name(o.config.kind)},
              {"learning_rate", o.config.learning_rate},
              {"beta1", o.config.beta1},
              {"beta2", o.config.beta2},
              {"epsilon", o.config.epsilon},
              {"steps", o.steps},
              {"first_moment", shapes_to_json(o.first_moment)},
              {"second_moment", shapes_to_json(o.second_moment)}};
      if (o.config.clip) jo["clip"] = {o.config.clip->first, o.config.clip->second};
      jn["optimizer"] = jo;
    }
    meta["networks"].push_back(jn);
  }
  // Doubles in the metadata are printed with round-trip precision by nlohmann.
  const std::string text = meta.dump();
  out << "risbin-checkpoint " << kCheckpointVersion << '\n' << text.size() << '\n' << text;
  for (const auto& n : ckpt.networks) {
    write_set(out, n.params.values);
    if (n.optimizer) {
      write_set(out, n.optimizer->first_moment);
      write_set(out, n.optimizer->second_moment);
    }
  }
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "risbin-checkpoint") throw ConfigError("not a risbin checkpoint");
  if (version != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));
  std::size_t len = 0;
  in >> len;
  in.get();
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ConfigError("checkpoint header truncated");
  const json meta = json::parse(text);

  Checkpoint ckpt;
  ckpt.agent = meta.at("agent").get<std::string>();
  ckpt.step = meta.at("step").get<std::int64_t>();
  for (const auto& jn : meta.at("networks")) {
    NetworkState n;
    n.name = jn.at("name").get<std::string>();
    n.spec = spec_from_json(jn.at("spec"));
    n.params.mode = jn.at("mode").get<std::string>() == "train" ? nn::Mode::train : nn::Mode::eval;
    n.params.values = shaped_from_json(jn.at("params"));
    if (jn.contains("optimizer")) {
      const auto& jo = jn.at("optimizer");
      OptimizerSnapshot o;
      o.config.kind = jo.at("kind").get<std::string>() == "sgd" ? nn::OptimizerKind::sgd : nn::OptimizerKind::adam;
      o.config.learning_rate = jo.at("learning_rate").get<double>();
      o.config.beta1 = jo.at("beta1").get<double>();
      o.config.beta2 = jo.at("beta2").get<double>();
      o.config.epsilon = jo.at("epsilon").get<double>();
      if (jo.contains("clip")) o.config.clip = std::pair{jo.at("clip").at(0).get<double>(), jo.at("clip").at(1).get<double>()};
      o.steps = jo.at("steps").get<std::int64_t>();
      o.first_moment = shaped_from_json(jo.at("first_moment"));
      o.second_moment = shaped_from_json(jo.at("second_moment"));
      n.optimizer = std::move(o);
    }
    ckpt.networks.push_back(std::move(n));
  }
  for (auto& n : ckpt.networks) {
    read_set(in, n.params.values);
    if (n.optimizer) {
      read_set(in, n.optimizer->first_moment);
      read_set(in, n.optimizer->second_moment);
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace risbin
