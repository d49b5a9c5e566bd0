#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "converse/ensemble.hpp"
#include "converse/error.hpp"
#include "converse/io.hpp"
#include "converse/mdp.hpp"
#include "converse/policy.hpp"
#include "converse/scoring.hpp"
#include "converse/service.hpp"
#include "converse/text.hpp"

namespace py = pybind11;
using namespace converse;

namespace {

std::shared_ptr<const Policy> policy_from(const std::string& spec) {
  if (spec == "random") return std::make_shared<RandomPolicy>();
  if (spec == "fixed-model") return std::make_shared<FixedModelPolicy>(default_model_ids());
  const auto j = read_json(spec);
  if (j.value("format", "") == "converse.policy") return std::make_shared<NetPolicy>(NetPolicy::from_json(j));
  return std::make_shared<NetPolicy>(PolicyVariant::GreedyActionValue, ScoringNet::from_json(j), 1.0, "supervised");
}

std::shared_ptr<const FeatureExtractor> extractor_for(const FeatureLayout& layout) {
  return std::make_shared<const FeatureExtractor>(layout, bundled_embeddings(layout.config().embedding_dim));
}

FeatureLayout layout_for(const Policy& p, std::size_t embedding_dim) {
  if (const auto* np = dynamic_cast<const NetPolicy*>(&p)) return np->net().layout();
  FeatureConfig c;
  c.embedding_dim = embedding_dim;
  return FeatureLayout(c);
}

ScoringNet load_net(const std::string& path) {
  const auto j = read_json(path);
  return j.value("format", "") == "converse.policy" ? NetPolicy::from_json(j).net() : ScoringNet::from_json(j);
}

Dialogue dialogue_of(const std::vector<std::pair<std::string, std::string>>& turns) {
  Dialogue d;
  for (const auto& [speaker, text] : turns)
    d.turns.push_back(speaker_from_string(speaker) == Speaker::User ? Utterance::user(text) : Utterance::system(text));
  return d;
}

py::dict report_dict(const SimulationReport& r) {
  py::dict d;
  d["episodes"] = r.episodes;
  d["avg_return"] = r.avg_return;
  d["sd_return"] = r.sd_return;
  d["avg_reward_per_step"] = r.avg_reward_per_step;
  d["sd_reward_per_step"] = r.sd_reward_per_step;
  d["avg_length"] = r.avg_length;
  d["sd_length"] = r.sd_length;
  d["total_steps"] = r.total_steps;
  d["priority_steps"] = r.priority_steps;
  return d;
}

class PyService {
 public:
  PyService(const std::string& policy, const std::string& log_path, std::uint64_t seed, bool debug,
            std::size_t embedding_dim) {
    const auto p = policy_from(policy);
    const auto ex = extractor_for(layout_for(*p, embedding_dim));
    auto ens = std::make_shared<const ResponseEnsemble>(
        make_default_ensemble(default_services(ex->layout().config().embedding_dim)));
    ServiceConfig cfg;
    cfg.debug = debug;
    std::shared_ptr<DialogueLog> log;
    if (!log_path.empty()) {
      cfg.log_path = log_path;
      log = std::make_shared<DialogueLog>(log_path);
    }
    service_ = std::make_unique<ChatService>(ens, ex, p, cfg, log, seed);
  }
  std::string handle(const std::string& message) { return service_->handle_text(message); }
  std::size_t active_sessions() const { return service_->active_sessions(); }

 private:
  std::unique_ptr<ChatService> service_;
};

}  // namespace

PYBIND11_MODULE(_converse, m) {
  m.doc() = "Bindings for the converse dialogue-manager library";
  py::register_exception<Error>(m, "ConverseError", PyExc_ValueError);

  m.attr("PROTOCOL_VERSION") = kProtocolVersion;
  m.attr("REWARD_FEATURE_DIM") = kRewardFeatureDim;
  m.def("tokenize", [](const std::string& s) { return text::tokenize(s); });

  py::class_<FeatureLayout>(m, "FeatureLayout")
      .def(py::init([](std::size_t embedding_dim, std::size_t pos_buckets) {
             FeatureConfig c;
             c.embedding_dim = embedding_dim;
             c.pos_buckets = pos_buckets;
             return FeatureLayout(c);
           }),
           py::arg("embedding_dim") = 50, py::arg("pos_buckets") = 100)
      .def_property_readonly("total_dim", &FeatureLayout::total_dim)
      .def("groups", [](const FeatureLayout& l) {
        std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
        for (const auto& g : l.groups()) out.emplace_back(g.name, g.offset, g.length);
        return out;
      });

  py::class_<FeatureExtractor, std::shared_ptr<FeatureExtractor>>(m, "FeatureExtractor")
      .def(py::init([](const FeatureLayout& l) {
        return std::make_shared<FeatureExtractor>(l, bundled_embeddings(l.config().embedding_dim));
      }))
      .def("features",
           [](const FeatureExtractor& ex, const std::vector<std::pair<std::string, std::string>>& turns,
              const std::string& model_id, const std::string& text) {
             return Vector(ex.scoring_features(dialogue_of(turns), CandidateResponse{model_id, text, false, {}}));
           },
           py::arg("turns"), py::arg("model_id"), py::arg("text"));

  py::class_<ScoringNet>(m, "ScoringNet")
      .def(py::init([](const FeatureLayout& l, std::size_t h1, std::size_t h2, std::uint64_t seed) {
             Rng rng(seed);
             return ScoringNet(l, h1, h2, rng);
           }),
           py::arg("layout"), py::arg("h1") = 500, py::arg("h2") = 20, py::arg("seed") = 0)
      .def_static("load", &load_net)
      .def_property_readonly("input_dim", &ScoringNet::input_dim)
      .def_property_readonly("num_params", &ScoringNet::num_params)
      .def_property_readonly("layout", &ScoringNet::layout)
      .def("forward", [](const ScoringNet& n, const Vector& x) {
        n.check_input(x);
        const auto r = n.forward(x);
        return py::make_tuple(Vector(r.probs), r.score);
      })
      .def("scores", [](const ScoringNet& n, const Matrix& x) {
        if (static_cast<std::size_t>(x.rows()) != n.input_dim()) throw LayoutMismatch("feature rows do not match");
        return Vector(n.forward_batch(x).scores);
      }, "Scores for each column of a feature matrix.")
      .def("save", [](const ScoringNet& n, const std::string& p) { n.save(p); });

  py::class_<PyService>(m, "ChatService")
      .def(py::init<const std::string&, const std::string&, std::uint64_t, bool, std::size_t>(),
           py::arg("policy") = "random", py::arg("log_path") = "", py::arg("seed") = 0, py::arg("debug") = true,
           py::arg("embedding_dim") = 50)
      .def("handle", &PyService::handle, py::call_guard<py::gil_scoped_release>(),
           "Handles one JSON message and returns the JSON reply.")
      .def_property_readonly("active_sessions", &PyService::active_sessions);

  m.def(
      "simulate",
      [](const std::string& store_dir, const std::string& policy, const std::string& outcome,
         const std::string& transition, std::size_t episodes, std::uint64_t seed, std::size_t threads) {
        const auto store = HistoryStore::load(store_dir);
        const auto net = std::make_shared<const ScoringNet>(load_net(outcome));
        const ScoringNetOutcome out(net);
        const auto trans = transition.empty() ? TransitionModel::uniform(net->input_dim())
                                              : TransitionModel::from_json(read_json(transition));
        const auto p = policy == "supervised"
                           ? std::make_shared<NetPolicy>(PolicyVariant::GreedyActionValue, *net, 1.0, "supervised")
                           : policy_from(policy);
        const MDP mdp{store, out, trans, MDPConfig()};
        py::gil_scoped_release release;
        return simulate(mdp, *p, episodes, seed, threads);
      },
      py::arg("store"), py::arg("policy"), py::arg("outcome"), py::arg("transition") = "", py::arg("episodes") = 100,
      py::arg("seed") = 0, py::arg("threads") = 1);

  py::class_<SimulationReport>(m, "SimulationReport")
      .def_readonly("episodes", &SimulationReport::episodes)
      .def_readonly("avg_return", &SimulationReport::avg_return)
      .def_readonly("avg_reward_per_step", &SimulationReport::avg_reward_per_step)
      .def_readonly("avg_length", &SimulationReport::avg_length)
      .def("as_dict", &report_dict);

  m.def("count_dialogues", [](const std::string& path) { return DialogueLog::read(path).size(); },
        "Validates a dialogue log and returns its number of records.");
}
