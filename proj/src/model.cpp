#include "gstam/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "gstam/errors.hpp"

namespace gstam {

using nlohmann::json;

std::vector<Parameter*> MultiBranchModel::parameters() {
  std::vector<Parameter*> out;
  if (trunk.kind == TrunkKind::conv) {
    out.push_back(&trunk.weight);
    out.push_back(&trunk.bias);
  }
  for (auto& b : branches) {
    out.push_back(&b.attention.conv1_w);
    out.push_back(&b.attention.conv1_b);
    out.push_back(&b.attention.conv2_w);
    out.push_back(&b.attention.conv2_b);
    out.push_back(&b.head.weight);
  }
  return out;
}

std::vector<const Parameter*> MultiBranchModel::parameters() const {
  auto mut = const_cast<MultiBranchModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

MultiBranchModel make_model(const ModelConfig& config, const AttributeLayout& layout) {
  layout.validate();
  if (config.feature_dim == 0) throw ConfigError("model: feature_dim must be positive");
  if (config.trunk == TrunkKind::conv && config.trunk_k % 2 == 0) {
    throw ConfigError("model: trunk kernel size must be odd");
  }
  MultiBranchModel model;
  model.config = config;
  model.layout = layout;
  std::mt19937_64 rng(config.seed);

  const std::size_t d = config.feature_dim;
  model.trunk.kind = config.trunk;
  model.trunk.k = config.trunk_k;
  if (config.trunk == TrunkKind::conv) {
    const std::size_t fan = d * config.trunk_k;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w(d, fan);
    for (double& v : w.values()) v = dist(rng);
    model.trunk.weight = Parameter("trunk.w", std::move(w));
    model.trunk.bias = Parameter("trunk.b", Tensor::vector(d));
  }

  const AttentionShape shape{d, config.hidden, config.k1, config.k2};
  for (const BranchSpec& spec : layout.branches) {
    Branch b;
    b.spec = spec;
    b.attention = make_attention(config.variant, shape, rng, spec.name + ".attention");
    b.head.weight = Parameter(spec.name + ".head.w", Tensor(spec.classes, d));
    model.branches.push_back(std::move(b));
  }
  return model;
}

Tensor branch_predict(const Tensor& aggregated, const BranchHead& head) {
  return softmax(matvec(head.weight.value, aggregated));
}

namespace {

void check_input(const MultiBranchModel& model, const Tensor& features) {
  if (features.rows() != model.feature_dim()) {
    throw DimensionError("model expects " + std::to_string(model.feature_dim()) +
                         "-dimensional features, got " + features.shape_string());
  }
  if (features.cols() == 0) throw DimensionError("model: empty frame sequence");
}

}  // namespace

GraphForward model_forward(Graph& g, const MultiBranchModel& model, Var features, bool trainable) {
  check_input(model, features.value());
  auto bind = [&](const Parameter& p) { return trainable ? g.trainable(p) : g.frozen(p); };
  Var shared = features;
  if (model.trunk.kind == TrunkKind::conv) {
    shared = ad::relu(ad::conv1d_same(features, bind(model.trunk.weight), bind(model.trunk.bias), model.trunk.k));
  }
  GraphForward out;
  std::vector<Var> rows;
  rows.reserve(model.branches.size());
  for (const Branch& b : model.branches) {
    Var a = attention_forward(g, shared, b.attention, trainable);
    Var pooled = aggregate(shared, a);
    out.predictions.push_back(ad::softmax(ad::matvec(bind(b.head.weight), pooled)));
    rows.push_back(a);
  }
  out.attentions = ad::stack_rows(rows);
  return out;
}

ForwardResult model_forward(const MultiBranchModel& model, const Tensor& features) {
  check_input(model, features);
  Tensor shared = features;
  if (model.trunk.kind == TrunkKind::conv) {
    shared = relu(conv1d_same(features, model.trunk.weight.value, model.trunk.bias.value, model.trunk.k));
  }
  ForwardResult out;
  out.attentions = Tensor(model.branches.size(), features.cols());
  for (std::size_t i = 0; i < model.branches.size(); ++i) {
    const Branch& b = model.branches[i];
    const AttentionWeights a = attention_forward(shared, b.attention);
    out.predictions.push_back(branch_predict(aggregate(shared, a.a), b.head));
    for (std::size_t t = 0; t < features.cols(); ++t) out.attentions(i, t) = a.a[t];
  }
  return out;
}

std::vector<Tensor> predict_with_attention(const MultiBranchModel& model, const Tensor& features,
                                           const Tensor& attentions) {
  check_input(model, features);
  if (attentions.rows() != model.branch_count() || attentions.cols() != features.cols()) {
    throw DimensionError("attention override " + attentions.shape_string() + " does not match " +
                         std::to_string(model.branch_count()) + " branches x " +
                         std::to_string(features.cols()) + " frames");
  }
  Tensor shared = features;
  if (model.trunk.kind == TrunkKind::conv) {
    shared = relu(conv1d_same(features, model.trunk.weight.value, model.trunk.bias.value, model.trunk.k));
  }
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < model.branches.size(); ++i) {
    Tensor a = Tensor::vector(features.cols());
    for (std::size_t t = 0; t < features.cols(); ++t) a[t] = attentions(i, t);
    out.push_back(branch_predict(aggregate(shared, a), model.branches[i].head));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr const char* kCheckpointFormat = "gstam-checkpoint";
constexpr int kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"feature_dim", c.feature_dim},
              {"variant", to_string(c.variant)},
              {"hidden", c.hidden},
              {"k1", c.k1},
              {"k2", c.k2},
              {"trunk", c.trunk == TrunkKind::conv ? "conv" : "identity"},
              {"trunk_k", c.trunk_k},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.variant = parse_attention_variant(j.at("variant").get<std::string>());
  c.hidden = j.at("hidden").get<std::size_t>();
  c.k1 = j.at("k1").get<std::size_t>();
  c.k2 = j.at("k2").get<std::size_t>();
  const auto trunk = j.at("trunk").get<std::string>();
  if (trunk != "conv" && trunk != "identity") throw ParseError("checkpoint: unknown trunk '" + trunk + "'");
  c.trunk = trunk == "conv" ? TrunkKind::conv : TrunkKind::identity;
  c.trunk_k = j.at("trunk_k").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json layout_to_json(const AttributeLayout& layout) {
  json groups = json::array();
  for (const auto& g : layout.partition.groups) {
    json attrs = json::array();
    for (std::size_t m : g.members) {
      attrs.push_back({{"name", layout.branches[m].name}, {"classes", layout.branches[m].classes}});
    }
    groups.push_back({{"name", g.name}, {"attributes", attrs}});
  }
  return groups;
}

AttributeLayout layout_from_json(const json& j) {
  std::vector<GroupDecl> decls;
  for (const auto& g : j) {
    GroupDecl d;
    d.name = g.at("name").get<std::string>();
    for (const auto& a : g.at("attributes")) {
      d.attributes.push_back({a.at("name").get<std::string>(), a.at("classes").get<std::size_t>()});
    }
    decls.push_back(std::move(d));
  }
  return make_layout(decls);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const MultiBranchModel& model) {
  json params = json::array();
  for (const Parameter* p : model.parameters()) {
    params.push_back({{"name", p->name},
                      {"shape", {p->value.rows(), p->value.cols()}},
                      {"values", p->value.data()}});
  }
  const json doc{{"format", kCheckpointFormat},
                 {"version", kCheckpointVersion},
                 {"config", config_to_json(model.config)},
                 {"groups", layout_to_json(model.layout)},
                 {"parameters", params}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

MultiBranchModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format") != kCheckpointFormat || doc.at("version") != kCheckpointVersion) {
      throw ParseError("checkpoint " + path.string() + ": unsupported format");
    }
    MultiBranchModel model = make_model(config_from_json(doc.at("config")), layout_from_json(doc.at("groups")));
    std::map<std::string, const json*> stored;
    for (const auto& p : doc.at("parameters")) stored[p.at("name").get<std::string>()] = &p;
    for (Parameter* p : model.parameters()) {
      auto it = stored.find(p->name);
      if (it == stored.end()) throw ParseError("checkpoint missing parameter '" + p->name + "'");
      const json& entry = *it->second;
      const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != p->value.rows() || shape[1] != p->value.cols()) {
        throw ParseError("checkpoint parameter '" + p->name + "' has wrong shape");
      }
      p->value = Tensor(shape[0], shape[1], entry.at("values").get<std::vector<double>>());
      p->grad = Tensor(shape[0], shape[1]);
    }
    if (stored.size() != model.parameters().size()) throw ParseError("checkpoint has unexpected parameters");
    return model;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace gstam
