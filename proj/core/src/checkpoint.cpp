#include "minipath/checkpoint.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "minipath/error.hpp"
#include "minipath/text.hpp"

namespace minipath {

namespace {

constexpr std::string_view kMagic = "minipath-checkpoint 1";

std::string_view kind_name(ad::ParamKind k) {
  switch (k) {
    case ad::ParamKind::kWeight:
      return "weight";
    case ad::ParamKind::kBias:
      return "bias";
    case ad::ParamKind::kEmbedding:
      return "embedding";
  }
  return "weight";
}

void write_values(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_hex(values[i]);
  out << '\n';
}

std::map<std::string, std::string> config_fields(const TrainConfig& c) {
  return {
      {"learning_rate", format_hex(c.learning_rate)},
      {"epochs", std::to_string(c.epochs)},
      {"dropout", format_hex(c.dropout)},
      {"weight_decay", format_hex(c.weight_decay)},
      {"lambda", format_hex(c.lambda)},
      {"mu", format_hex(c.mu)},
      {"batch_size", std::to_string(c.batch_size)},
      {"seed", std::to_string(c.seed)},
      {"adam_beta1", format_hex(c.adam_beta1)},
      {"adam_beta2", format_hex(c.adam_beta2)},
      {"adam_epsilon", format_hex(c.adam_epsilon)},
  };
}

class Reader {
 public:
  Reader(std::istream& in, std::string_view name) : in_(in), name_(name) {}

  std::string line() {
    std::string l;
    if (!std::getline(in_, l)) fail("unexpected end of file");
    ++line_no_;
    return std::string(chomp(l));
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError(fmt::format("{}:{}: {}", name_, line_no_, msg));
  }

  // Reads "<tag> key=value key=value ..." into a map.
  std::map<std::string, std::string> fields(std::string_view tag) {
    std::string l = line();
    auto parts = split(l, ' ');
    if (parts.empty() || parts[0] != tag) fail(fmt::format("expected '{}' record", tag));
    std::map<std::string, std::string> out;
    for (std::size_t i = 1; i < parts.size(); ++i) {
      auto eq = parts[i].find('=');
      if (eq == std::string_view::npos) fail(fmt::format("malformed field '{}'", parts[i]));
      out.emplace(std::string(parts[i].substr(0, eq)), std::string(parts[i].substr(eq + 1)));
    }
    return out;
  }

  std::vector<double> values(std::size_t expected) {
    std::string l = line();
    std::vector<double> out;
    out.reserve(expected);
    for (std::string_view tok : split(l, ' ')) {
      if (tok.empty()) continue;
      try {
        out.push_back(parse_hex(tok));
      } catch (const InputError& e) {
        fail(e.what());
      }
    }
    if (out.size() != expected) fail(fmt::format("expected {} values, found {}", expected, out.size()));
    return out;
  }

 private:
  std::istream& in_;
  std::string name_;
  std::size_t line_no_ = 0;
};

std::uint64_t to_u64(const std::map<std::string, std::string>& f, const char* key, const Reader& r) {
  auto it = f.find(key);
  if (it == f.end()) r.fail(fmt::format("missing '{}'", key));
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size()) r.fail(fmt::format("invalid '{}'", key));
  return v;
}

double to_double(const std::map<std::string, std::string>& f, const char* key, const Reader& r) {
  auto it = f.find(key);
  if (it == f.end()) r.fail(fmt::format("missing '{}'", key));
  return parse_hex(it->second);
}

}  // namespace

std::string format_hex(double v) { return fmt::format("{:a}", v); }

double parse_hex(std::string_view s) {
  std::string_view body = s;
  bool negative = false;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  if (body == "inf" || body == "nan") throw InputError(fmt::format("non-finite value '{}'", s));
  if (body.starts_with("0x") || body.starts_with("0X")) body.remove_prefix(2);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != body.data() + body.size()) {
    throw InputError(fmt::format("invalid hexadecimal float '{}'", s));
  }
  return negative ? -v : v;
}

void save_checkpoint(const CoTrainModel& model, std::ostream& out) {
  out << kMagic << '\n';
  out << "dims";
  for (const auto& [k, v] : to_fields(model.dims())) out << ' ' << k << '=' << v;
  out << '\n';
  out << "config";
  for (const auto& [k, v] : config_fields(model.config)) out << ' ' << k << '=' << v;
  out << '\n';
  out << "rng " << model.rng << '\n';
  const auto params = model.params();
  const bool has_moments = model.optimizer.first_moment.size() == params.size();
  out << "optimizer step=" << model.optimizer.step << " moments=" << (has_moments ? 1 : 0) << '\n';
  out << "tensors count=" << params.size() << '\n';
  for (std::size_t k = 0; k < params.size(); ++k) {
    const ad::Param& p = *params[k];
    out << "tensor name=" << p.name << " rows=" << p.rows << " cols=" << p.cols << " kind=" << kind_name(p.kind)
        << '\n';
    write_values(out, p.value);
    if (has_moments) {
      write_values(out, model.optimizer.first_moment[k]);
      write_values(out, model.optimizer.second_moment[k]);
    }
  }
  out << "end\n";
}

void save_checkpoint_file(const CoTrainModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write checkpoint '{}'", path));
  save_checkpoint(model, out);
  if (!out) throw InputError(fmt::format("error while writing checkpoint '{}'", path));
}

CoTrainModel load_checkpoint(std::istream& in, std::string_view source_name) {
  Reader r(in, source_name);
  if (r.line() != kMagic) r.fail("not a minipath checkpoint");
  ModelDims dims = dims_from_fields(r.fields("dims"));
  auto cfg_fields = r.fields("config");

  CoTrainModel model(dims, 0);
  TrainConfig& c = model.config;
  c.learning_rate = to_double(cfg_fields, "learning_rate", r);
  c.epochs = to_u64(cfg_fields, "epochs", r);
  c.dropout = to_double(cfg_fields, "dropout", r);
  c.weight_decay = to_double(cfg_fields, "weight_decay", r);
  c.lambda = to_double(cfg_fields, "lambda", r);
  c.mu = to_double(cfg_fields, "mu", r);
  c.batch_size = to_u64(cfg_fields, "batch_size", r);
  c.seed = to_u64(cfg_fields, "seed", r);
  c.adam_beta1 = to_double(cfg_fields, "adam_beta1", r);
  c.adam_beta2 = to_double(cfg_fields, "adam_beta2", r);
  c.adam_epsilon = to_double(cfg_fields, "adam_epsilon", r);

  std::string rng_line = r.line();
  if (!rng_line.starts_with("rng ")) r.fail("expected 'rng' record");
  std::istringstream rng_in(rng_line.substr(4));
  rng_in >> model.rng;
  if (!rng_in) r.fail("invalid RNG state");

  auto opt = r.fields("optimizer");
  model.optimizer.step = to_u64(opt, "step", r);
  const bool has_moments = to_u64(opt, "moments", r) != 0;

  auto params = model.params();
  if (to_u64(r.fields("tensors"), "count", r) != params.size()) r.fail("tensor count does not match the model");
  for (ad::Param* p : params) {
    auto f = r.fields("tensor");
    if (f["name"] != p->name) r.fail(fmt::format("expected tensor '{}', found '{}'", p->name, f["name"]));
    if (to_u64(f, "rows", r) != p->rows || to_u64(f, "cols", r) != p->cols) {
      throw ShapeError(fmt::format("{}: tensor '{}' has shape {}x{}, model expects {}x{}", source_name, p->name,
                                   f["rows"], f["cols"], p->rows, p->cols));
    }
    p->value = r.values(p->size());
    if (has_moments) {
      model.optimizer.first_moment.push_back(r.values(p->size()));
      model.optimizer.second_moment.push_back(r.values(p->size()));
    }
  }
  if (r.line() != "end") r.fail("expected 'end'");
  if (!model.all_finite()) r.fail("checkpoint contains non-finite parameters");
  return model;
}

CoTrainModel load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open checkpoint '{}'", path));
  return load_checkpoint(in, path);
}

}  // namespace minipath
