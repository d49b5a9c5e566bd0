#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "converse/dialogue.hpp"
#include "converse/embeddings.hpp"
#include "converse/nlu.hpp"
#include "converse/resources.hpp"

namespace converse {

namespace model_ids {
inline constexpr const char* kAlicebot = "Alicebot";
inline constexpr const char* kElizabot = "Elizabot";
inline constexpr const char* kInitiatorbot = "Initiatorbot";
inline constexpr const char* kStorybot = "Storybot";
inline constexpr const char* kEvibot = "Evibot";
inline constexpr const char* kFactGenerator = "BoWFactGenerator";
inline constexpr const char* kTrump = "BoWTrump";
inline constexpr const char* kGameOfThrones = "BoWGameOfThrones";
inline constexpr const char* kSubtitles = "RetrievalSubtitles";
inline constexpr const char* kSearchSnippets = "SearchSnippets";
inline constexpr const char* kEscapePlan = "BoWEscapePlan";
}  // namespace model_ids

/// A response model maps a dialogue to at most one candidate.
class ResponseModel {
 public:
  virtual ~ResponseModel() = default;
  virtual const std::string& name() const = 0;
  virtual std::optional<CandidateResponse> generate(const Dialogue& dialogue, Rng& rng) const = 0;
};

// ---------------------------------------------------------------------------
// Pluggable external services. Live clients implement the same interfaces.

class QABackend {
 public:
  virtual ~QABackend() = default;
  /// Throws BackendUnavailable when the service cannot be reached.
  virtual std::optional<std::string> ask(const std::string& query) const = 0;
};

class FixtureQABackend : public QABackend {
 public:
  explicit FixtureQABackend(std::map<std::string, std::string> answers);
  static FixtureQABackend load(const std::filesystem::path& json_path);
  std::optional<std::string> ask(const std::string& query) const override;

 private:
  std::map<std::string, std::string> answers_;
};

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  /// Throws SearchUnavailable when the service cannot be reached.
  virtual std::vector<std::string> search(const std::string& query) const = 0;
};

class FixtureSearchClient : public SearchClient {
 public:
  explicit FixtureSearchClient(std::map<std::string, std::vector<std::string>> results);
  static FixtureSearchClient load(const std::filesystem::path& json_path);
  std::vector<std::string> search(const std::string& query) const override;

 private:
  std::map<std::string, std::vector<std::string>> results_;
};

/// Scores a snippet (or retrieved text) as a reply to an utterance. Higher is better.
class SnippetScorer {
 public:
  virtual ~SnippetScorer() = default;
  virtual double score(std::string_view utterance, std::string_view snippet) const = 0;
};

class CosineSnippetScorer : public SnippetScorer {
 public:
  explicit CosineSnippetScorer(std::shared_ptr<const EmbeddingTable> emb) : emb_(std::move(emb)) {}
  double score(std::string_view utterance, std::string_view snippet) const override;

 private:
  std::shared_ptr<const EmbeddingTable> emb_;
};

/// Scores a (dialogue, candidate) pair; used by the escape-plan selector.
using CandidateScorer = std::function<double(const Dialogue&, const CandidateResponse&)>;

// ---------------------------------------------------------------------------
// Retrieval.

/// A corpus with TF-IDF weights and item vectors computed once at load.
class RetrievalIndex {
 public:
  RetrievalIndex(Corpus corpus, std::shared_ptr<const EmbeddingTable> emb);

  const Corpus& corpus() const { return corpus_; }
  const EmbeddingTable& embeddings() const { return *emb_; }
  /// Smoothed inverse document frequency; 1 for words outside the corpus.
  double idf(const std::string& word) const;
  /// TF-IDF-weighted mean embedding of a token list.
  Vector weighted_vector(const std::vector<std::string>& tokens) const;
  const Vector& item_vector(std::size_t i) const { return item_vectors_.at(i); }
  /// Tokens used to represent item i (its keywords if present, else its text).
  std::vector<std::string> item_tokens(std::size_t i) const;

 private:
  Corpus corpus_;
  std::shared_ptr<const EmbeddingTable> emb_;
  std::unordered_map<std::string, double> idf_;
  std::vector<Vector> item_vectors_;
};

struct RetrievalHit {
  std::size_t index = 0;
  const CorpusItem* item = nullptr;
  double similarity = 0.0;
};

inline constexpr std::size_t kRetrievalContextWindow = 6;

/// Top-k items by cosine to the last `window` utterances; ties by corpus index.
std::vector<RetrievalHit> retrieve_topk(const RetrievalIndex& index, const Dialogue& dialogue,
                                        std::size_t k,
                                        std::size_t window = kRetrievalContextWindow);

/// Empty unless a trigger word or phrase appears in the last user utterance.
bool trigger_matches(std::string_view utterance, const std::vector<std::string>& triggers);

std::optional<CandidateResponse> keyword_gated_retrieve(const RetrievalIndex& index,
                                                        const Dialogue& dialogue,
                                                        const std::vector<std::string>& triggers,
                                                        const std::string& model_id);

// ---------------------------------------------------------------------------
// Helpers shared by the template models.

/// Correct-sentence test: starts with a letter, ends with . ! or ?, has no
/// wildcard marker and at least two tokens.
bool is_correct_sentence(std::string_view s);

/// Drops noise characters and truncates to the last full sentence. Empty if
/// no sentence terminator survives.
std::string preprocess_snippet(std::string_view snippet);

/// First priority candidate in precedence order, or none. Priority candidates
/// from models not listed rank after all listed ones, in input order.
std::optional<CandidateResponse> priority_select(const std::vector<CandidateResponse>& candidates,
                                                 const std::vector<std::string>& precedence);
std::optional<std::size_t> priority_select_index(const std::vector<CandidateResponse>& candidates,
                                                 const std::vector<std::string>& precedence);

// ---------------------------------------------------------------------------
// Models.

struct AliceRule {
  std::string pattern;   // tokens, at most one "*"
  std::string response;  // "*" is replaced by the capture
  bool priority = false;
};

class Alicebot : public ResponseModel {
 public:
  Alicebot();  // bundled rules
  explicit Alicebot(std::vector<AliceRule> rules, std::string fallback);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  CandidateResponse respond(std::string_view utterance) const;

 private:
  std::string name_ = model_ids::kAlicebot;
  std::vector<AliceRule> rules_;
  std::string fallback_;
};

struct TemplateRule {
  std::string pattern;                 // regex over normalized text, one capture group at most
  std::vector<std::string> responses;  // "{0}" is the reflected capture
};

class Elizabot : public ResponseModel {
 public:
  Elizabot();
  Elizabot(std::vector<TemplateRule> rules, std::unordered_map<std::string, std::string> reflections);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  std::string reflect(std::string_view capture) const;

 private:
  struct Compiled {
    std::regex re;
    std::vector<std::string> responses;
  };
  std::string name_ = model_ids::kElizabot;
  std::vector<Compiled> rules_;
  std::unordered_map<std::string, std::string> reflections_;
};

class Initiatorbot : public ResponseModel {
 public:
  Initiatorbot();
  Initiatorbot(std::vector<std::string> phrases, std::vector<std::string> facts);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  bool recently_triggered(const Dialogue& d) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::string name_ = model_ids::kInitiatorbot;
  std::vector<std::string> phrases_;
  std::vector<std::string> facts_;
  Nlu nlu_;
};

inline constexpr const char* kStoryPrefix = "Alright, let me tell you the story ";

class Storybot : public ResponseModel {
 public:
  Storybot();
  explicit Storybot(std::vector<Story> stories);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  bool triggered(std::string_view utterance) const;

 private:
  std::string name_ = model_ids::kStorybot;
  std::vector<Story> stories_;
};

class Evibot : public ResponseModel {
 public:
  explicit Evibot(std::shared_ptr<const QABackend> qa, WordSet entity_lexicon = {});
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  std::optional<CandidateResponse> respond(std::string_view utterance) const;
  bool is_valid(const std::optional<std::string>& answer) const;

  /// Maximal spans of capitalised non-stop-words or entity-lexicon words.
  std::vector<std::string> entity_subphrases(std::string_view utterance) const;
  /// Every contiguous token span shorter than the utterance, longest first.
  static std::vector<std::string> all_subphrases(const std::vector<std::string>& tokens);

 private:
  std::string name_ = model_ids::kEvibot;
  std::shared_ptr<const QABackend> qa_;
  WordSet entity_lexicon_;
  Nlu nlu_;
};

/// Retrieval over a corpus, optionally gated on triggers and reranked.
class RetrievalModel : public ResponseModel {
 public:
  struct Options {
    std::size_t k = 20;
    std::vector<std::string> triggers;  // empty: always fires
    std::shared_ptr<const SnippetScorer> reranker;
    std::size_t window = kRetrievalContextWindow;
  };
  RetrievalModel(std::string name, std::shared_ptr<const RetrievalIndex> index, Options options);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;

 private:
  std::string name_;
  std::shared_ptr<const RetrievalIndex> index_;
  Options opt_;
};

class EscapePlan : public ResponseModel {
 public:
  EscapePlan();
  explicit EscapePlan(std::vector<std::string> responses, CandidateScorer selector = {});
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  /// Always returns a response.
  CandidateResponse respond(const Dialogue& d, Rng& rng) const;
  void set_selector(CandidateScorer selector) { selector_ = std::move(selector); }
  const std::vector<std::string>& responses() const { return responses_; }

 private:
  std::string name_ = model_ids::kEscapePlan;
  std::vector<std::string> responses_;
  CandidateScorer selector_;
};

class SearchSnippetModel : public ResponseModel {
 public:
  SearchSnippetModel(std::shared_ptr<const SearchClient> search,
                     std::shared_ptr<const SnippetScorer> scorer);
  const std::string& name() const override { return name_; }
  std::optional<CandidateResponse> generate(const Dialogue& d, Rng& rng) const override;
  static constexpr std::size_t kMaxSnippets = 10;

 private:
  std::string name_ = model_ids::kSearchSnippets;
  std::shared_ptr<const SearchClient> search_;
  std::shared_ptr<const SnippetScorer> scorer_;
};

// ---------------------------------------------------------------------------

/// The set of response models behind the dialogue manager.
class ResponseEnsemble {
 public:
  ResponseEnsemble() = default;
  explicit ResponseEnsemble(std::vector<std::shared_ptr<const ResponseModel>> models,
                            bool parallel = false);

  void add(std::shared_ptr<const ResponseModel> model);
  std::vector<std::string> model_ids() const;
  std::size_t size() const { return models_.size(); }
  const ResponseModel& model(std::size_t i) const { return *models_.at(i); }

  /// Runs every model on its own RNG stream derived from one draw of `rng`
  /// and joins all results, in model order.
  std::vector<CandidateResponse> generate(const Dialogue& dialogue, Rng& rng) const;

 private:
  std::vector<std::shared_ptr<const ResponseModel>> models_;
  bool parallel_ = false;
};

struct EnsembleServices {
  std::shared_ptr<const EmbeddingTable> embeddings;
  std::shared_ptr<const QABackend> qa;
  std::shared_ptr<const SearchClient> search;
  std::shared_ptr<const SnippetScorer> snippet_scorer;  // default: cosine
  CandidateScorer escape_selector;                      // default: uniform
};

/// Embedding table over the bundled vocabulary.
std::shared_ptr<const EmbeddingTable> bundled_embeddings(std::size_t dim = 50);
/// Fills unset services with the bundled fixtures.
EnsembleServices default_services(std::size_t embedding_dim = 50);
ResponseEnsemble make_default_ensemble(const EnsembleServices& services);
std::vector<std::string> default_model_ids();

}  // namespace converse
