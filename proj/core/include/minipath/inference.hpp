#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minipath/model.hpp"
#include "minipath/taxonomy.hpp"

namespace minipath {

// Source of the aggregated class distribution y_agg (length L + 1) for a
// query against one mini-path.
class PathScorer {
 public:
  virtual ~PathScorer() = default;
  virtual std::vector<double> score(std::string_view query, const MiniPath& path) = 0;
};

// Scores with a trained model in evaluation mode. Anchor propagation is
// computed once at construction, and context encodings are shared across
// the paths scored for one query.
class ModelScorer : public PathScorer {
 public:
  ModelScorer(CoTrainModel& model, const FeatureSources& sources);

  std::vector<double> score(std::string_view query, const MiniPath& path) override;
  // Scores every path for one query on a single tape.
  std::vector<std::vector<double>> score_all(std::string_view query, const std::vector<MiniPath>& paths);

 private:
  CoTrainModel& model_;
  const FeatureSources& sources_;
  std::vector<std::vector<double>> propagated_;
};

struct ScoredTerm {
  TermId id = 0;
  double score = 0.0;
};

struct ParentRanking {
  std::string query;
  // Descending score, ties broken by ascending term id.
  std::vector<ScoredTerm> ranked;
  // Terms of the taxonomy that no mini-path covers; they are not ranked.
  std::vector<TermId> excluded;

  std::optional<TermId> predicted() const;
  // 1-based rank of id, or nullopt when it is not ranked.
  std::optional<std::size_t> rank_of(TermId id) const;
};

// Mean over every mini-path containing a term of the probability the path
// assigns to that term's position.
ParentRanking rank_from_path_scores(const Taxonomy& t, const std::vector<MiniPath>& paths,
                                    const std::vector<std::vector<double>>& path_scores, std::string_view query);

ParentRanking score_parents(PathScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                            std::string_view query);
ParentRanking score_parents(ModelScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                            std::string_view query);

double accuracy(std::span<const TermId> predicted, std::span<const TermId> truth);
// Mean reciprocal rank of the truth in each ranking; throws when absent.
double mrr(std::span<const ParentRanking> rankings, std::span<const TermId> truth);
// 2 depth(lca) / (depth(a) + depth(b)) with root depth 1.
double wu_palmer(const Taxonomy& t, TermId a, TermId b);

struct TestPair {
  std::string query;
  TermId parent = 0;
};

// Lines "query<TAB>true_parent"; the parent must be a taxonomy term.
std::vector<TestPair> load_test_pairs(std::istream& in, const Taxonomy& t, std::string_view source_name = "<stream>");
std::vector<TestPair> load_test_pairs_file(const std::string& path, const Taxonomy& t);

struct QueryRecord {
  std::string query;
  TermId truth = 0;
  std::optional<TermId> predicted;
  std::size_t rank = 0;  // 0 when the truth is not covered by any mini-path
  double wu_palmer = 0.0;
};

struct EvalReport {
  double accuracy = 0.0;
  double mrr = 0.0;
  double wu_palmer = 0.0;
  std::vector<QueryRecord> records;
};

// Scores every query independently against the seed taxonomy. A query whose
// true parent is uncovered contributes reciprocal rank 0.
EvalReport evaluate(PathScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                    const std::vector<TestPair>& tests);
EvalReport evaluate(ModelScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                    const std::vector<TestPair>& tests);
EvalReport evaluate_rankings(const Taxonomy& t, const std::vector<ParentRanking>& rankings,
                             const std::vector<TestPair>& tests);

void write_report_text(const EvalReport& report, const Taxonomy& t, std::ostream& out);
// "key: value" lines; metric keys appear once, one "query:" line per test pair.
void write_report_kv(const EvalReport& report, const Taxonomy& t, std::ostream& out);

// One block per query: "# query: <q>" followed by "rank<TAB>term<TAB>score".
void write_rankings(const std::vector<ParentRanking>& rankings, const Taxonomy& t, std::size_t top_k,
                    std::ostream& out);

}  // namespace minipath
