#include "minipath/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

ModelScorer::ModelScorer(CoTrainModel& model, const FeatureSources& sources)
    : model_(model), sources_(sources), propagated_(propagate_all(model.gat, sources.taxonomy, sources.embeddings)) {}

std::vector<double> ModelScorer::score(std::string_view query, const MiniPath& path) {
  ForwardPass pass(model_, sources_, Mode::kEval, nullptr, &propagated_);
  auto v = pass.tape().value(aggregate(pass.tape(), pass.views(query, path)));
  return {v.begin(), v.end()};
}

std::vector<std::vector<double>> ModelScorer::score_all(std::string_view query, const std::vector<MiniPath>& paths) {
  ForwardPass pass(model_, sources_, Mode::kEval, nullptr, &propagated_);
  std::vector<std::vector<double>> out;
  out.reserve(paths.size());
  for (const MiniPath& path : paths) {
    auto v = pass.tape().value(aggregate(pass.tape(), pass.views(query, path)));
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

std::optional<TermId> ParentRanking::predicted() const {
  if (ranked.empty()) return std::nullopt;
  return ranked.front().id;
}

std::optional<std::size_t> ParentRanking::rank_of(TermId id) const {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].id == id) return i + 1;
  }
  return std::nullopt;
}

ParentRanking rank_from_path_scores(const Taxonomy& t, const std::vector<MiniPath>& paths,
                                    const std::vector<std::vector<double>>& path_scores, std::string_view query) {
  if (paths.empty()) throw InputError("scoring needs at least one mini-path");
  if (paths.size() != path_scores.size()) throw ShapeError("one score vector per mini-path is required");
  // Contributions are summed in sorted order so the scores do not depend on
  // the order of `paths`.
  std::vector<std::vector<double>> contributions(t.size());
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const MiniPath& path = paths[k];
    const auto& probs = path_scores[k];
    if (probs.size() != path.length() + 1) {
      throw ShapeError(fmt::format("path score has {} entries, expected {}", probs.size(), path.length() + 1));
    }
    for (std::size_t l = 0; l < path.length(); ++l) {
      contributions[path.nodes[l]].push_back(probs[l]);
    }
  }
  ParentRanking r;
  r.query = std::string(query);
  for (TermId id = 0; id < t.size(); ++id) {
    auto& c = contributions[id];
    if (c.empty()) {
      r.excluded.push_back(id);
      continue;
    }
    std::sort(c.begin(), c.end());
    double sum = 0.0;
    for (double v : c) sum += v;
    r.ranked.push_back({id, sum / static_cast<double>(c.size())});
  }
  std::stable_sort(r.ranked.begin(), r.ranked.end(), [](const ScoredTerm& a, const ScoredTerm& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
  });
  return r;
}

namespace {
void warn_excluded(const ParentRanking& r) {
  if (!r.excluded.empty()) {
    spdlog::warn("query '{}': {} term(s) lie on no mini-path and are not ranked", r.query, r.excluded.size());
  }
}
}  // namespace

ParentRanking score_parents(PathScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                            std::string_view query) {
  std::vector<std::vector<double>> scores;
  scores.reserve(paths.size());
  for (const MiniPath& p : paths) scores.push_back(scorer.score(query, p));
  auto r = rank_from_path_scores(t, paths, scores, query);
  warn_excluded(r);
  return r;
}

ParentRanking score_parents(ModelScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                            std::string_view query) {
  auto r = rank_from_path_scores(t, paths, scorer.score_all(query, paths), query);
  warn_excluded(r);
  return r;
}

double accuracy(std::span<const TermId> predicted, std::span<const TermId> truth) {
  if (predicted.size() != truth.size()) throw InputError("accuracy: prediction and truth lengths differ");
  if (truth.empty()) throw InputError("accuracy of an empty test set is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double mrr(std::span<const ParentRanking> rankings, std::span<const TermId> truth) {
  if (rankings.size() != truth.size()) throw InputError("mrr: ranking and truth lengths differ");
  if (truth.empty()) throw InputError("mrr of an empty test set is undefined");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    auto rank = rankings[i].rank_of(truth[i]);
    if (!rank) throw InputError(fmt::format("mrr: true parent of '{}' is not ranked", rankings[i].query));
    sum += 1.0 / static_cast<double>(*rank);
  }
  return sum / static_cast<double>(truth.size());
}

double wu_palmer(const Taxonomy& t, TermId a, TermId b) {
  const double lca_depth = static_cast<double>(t.depth(t.lca(a, b)));
  return 2.0 * lca_depth / static_cast<double>(t.depth(a) + t.depth(b));
}

std::vector<TestPair> load_test_pairs(std::istream& in, const Taxonomy& t, std::string_view source_name) {
  std::vector<TestPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = chomp(line);
    if (trim(v).empty() || trim(v).front() == '#') continue;
    auto fields = split(v, '\t');
    if (fields.size() != 2 || trim(fields[0]).empty()) {
      throw InputError(fmt::format("{}:{}: expected 'query<TAB>true_parent'", source_name, line_no));
    }
    auto parent = t.find(fields[1]);
    if (!parent) {
      throw InputError(fmt::format("{}:{}: true parent '{}' is not in the taxonomy", source_name, line_no, fields[1]));
    }
    out.push_back({std::string(trim(fields[0])), *parent});
  }
  if (out.empty()) throw InputError(fmt::format("{}: no test pairs", source_name));
  return out;
}

std::vector<TestPair> load_test_pairs_file(const std::string& path, const Taxonomy& t) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open test file '{}'", path));
  return load_test_pairs(in, t, path);
}

EvalReport evaluate_rankings(const Taxonomy& t, const std::vector<ParentRanking>& rankings,
                             const std::vector<TestPair>& tests) {
  if (tests.empty()) throw InputError("evaluation needs at least one test pair");
  if (rankings.size() != tests.size()) throw InputError("one ranking per test pair is required");
  EvalReport report;
  double hits = 0.0, rr = 0.0, wup = 0.0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const ParentRanking& r = rankings[i];
    QueryRecord rec;
    rec.query = tests[i].query;
    rec.truth = tests[i].parent;
    rec.predicted = r.predicted();
    rec.rank = r.rank_of(rec.truth).value_or(0);
    rec.wu_palmer = rec.predicted ? wu_palmer(t, *rec.predicted, rec.truth) : 0.0;
    hits += rec.predicted && *rec.predicted == rec.truth ? 1.0 : 0.0;
    rr += rec.rank ? 1.0 / static_cast<double>(rec.rank) : 0.0;
    wup += rec.wu_palmer;
    report.records.push_back(std::move(rec));
  }
  const double n = static_cast<double>(tests.size());
  report.accuracy = hits / n;
  report.mrr = rr / n;
  report.wu_palmer = wup / n;
  return report;
}

EvalReport evaluate(PathScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                    const std::vector<TestPair>& tests) {
  std::vector<ParentRanking> rankings;
  for (const TestPair& tp : tests) rankings.push_back(score_parents(scorer, t, paths, tp.query));
  return evaluate_rankings(t, rankings, tests);
}

EvalReport evaluate(ModelScorer& scorer, const Taxonomy& t, const std::vector<MiniPath>& paths,
                    const std::vector<TestPair>& tests) {
  std::vector<ParentRanking> rankings;
  for (const TestPair& tp : tests) rankings.push_back(score_parents(scorer, t, paths, tp.query));
  return evaluate_rankings(t, rankings, tests);
}

void write_report_text(const EvalReport& report, const Taxonomy& t, std::ostream& out) {
  out << fmt::format("Evaluation over {} queries (ties broken by ascending term id)\n", report.records.size());
  out << fmt::format("  Accuracy : {:.6f}\n", report.accuracy);
  out << fmt::format("  MRR      : {:.6f}\n", report.mrr);
  out << fmt::format("  Wu&P     : {:.6f}\n\n", report.wu_palmer);
  out << fmt::format("{:<32} {:<32} {:<32} {:>6} {:>8}\n", "query", "true parent", "predicted", "rank", "wu&p");
  for (const QueryRecord& r : report.records) {
    out << fmt::format("{:<32} {:<32} {:<32} {:>6} {:>8.4f}\n", r.query, t.term(r.truth).surface,
                       r.predicted ? t.term(*r.predicted).surface : "-", r.rank ? std::to_string(r.rank) : "-",
                       r.wu_palmer);
  }
}

void write_report_kv(const EvalReport& report, const Taxonomy& t, std::ostream& out) {
  out << fmt::format("accuracy: {:.9f}\n", report.accuracy);
  out << fmt::format("mrr: {:.9f}\n", report.mrr);
  out << fmt::format("wu_palmer: {:.9f}\n", report.wu_palmer);
  out << fmt::format("queries: {}\n", report.records.size());
  out << "tie_break: ascending_term_id\n";
  for (const QueryRecord& r : report.records) {
    out << fmt::format("query: {}\ttruth={}\tpredicted={}\trank={}\twu_palmer={:.9f}\n", r.query,
                       t.term(r.truth).surface, r.predicted ? t.term(*r.predicted).surface : "",
                       r.rank, r.wu_palmer);
  }
}

void write_rankings(const std::vector<ParentRanking>& rankings, const Taxonomy& t, std::size_t top_k,
                    std::ostream& out) {
  for (const ParentRanking& r : rankings) {
    out << "# query: " << r.query << '\n';
    const std::size_t n = std::min(top_k, r.ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      out << fmt::format("{}\t{}\t{:.9f}\n", i + 1, t.term(r.ranked[i].id).surface, r.ranked[i].score);
    }
  }
}

}  // namespace minipath
