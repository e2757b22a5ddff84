#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sfr/evaluate.hpp"

namespace sfr {

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

/// Report document; layout is described in the README ("Report schema").
inline nlohmann::json report_to_json(const EvaluationReport& rep) {
  using nlohmann::json;
  json classes = json::object();
  for (int c = 0; c < 4; ++c) {
    const auto cls = static_cast<BoundClass>(c);
    classes[std::string(bound_class_name(cls))] = {{"count", rep.class_counts[c]}, {"fraction", rep.class_fraction(cls)}};
  }
  json methods = json::array();
  for (const auto& m : rep.methods) {
    json jm;
    jm["method"] = method_name(m.method);
    jm["rmse"] = {{"all", detail::optional_json(m.rmse_bound)},
                  {"higher", detail::optional_json(m.rmse_higher)},
                  {"lower", detail::optional_json(m.rmse_lower)},
                  {"every", detail::optional_json(m.rmse_every)}};
    jm["predictions"] = m.predictions;
    jm["fallbacks"] = m.fallbacks;
    jm["total_squared_error"] = m.total_squared_error;
    if (m.error_contribution) {
      json share = json::object();
      for (int c = 0; c < 4; ++c)
        share[std::string(bound_class_name(static_cast<BoundClass>(c)))] = (*m.error_contribution)[c];
      jm["error_contribution"] = share;
    } else {
      jm["error_contribution"] = nullptr;
    }
    json groups = json::array();
    for (const auto& g : m.by_truth)
      groups.push_back({{"class", bound_class_name(g.cls)}, {"truth", g.truth}, {"count", g.count}, {"rmse", g.rmse}});
    jm["by_truth"] = groups;
    jm["solver"] = {{"users_solved", m.users_solved},     {"failures", m.solver_failures},
                    {"iterations", m.iterations_total},   {"nonconverged", m.nonconverged},
                    {"sources", m.sources_total},         {"warm_start_kept", m.warm_start_kept}};
    methods.push_back(std::move(jm));
  }
  return {{"test_examples", rep.test_examples},
          {"bound_fraction", rep.bound_fraction()},
          {"classes", classes},
          {"methods", methods}};
}

/// `method<TAB>class<TAB>truth<TAB>count<TAB>rmse`; truth is `*` on whole-class rows.
inline void write_rmse_tsv(std::ostream& out, const EvaluationReport& rep) {
  out << "method\tclass\ttruth\tcount\trmse\n";
  auto hl_count = [&](BoundClass c) { return rep.class_counts[static_cast<int>(c)]; };
  for (const auto& m : rep.methods) {
    const auto name = method_name(m.method);
    auto row = [&](const char* cls, std::size_t n, const std::optional<double>& v) {
      if (v) out << name << '\t' << cls << "\t*\t" << n << '\t' << std::setprecision(17) << *v << '\n';
    };
    row("all", hl_count(BoundClass::higher) + hl_count(BoundClass::lower), m.rmse_bound);
    row("higher", hl_count(BoundClass::higher), m.rmse_higher);
    row("lower", hl_count(BoundClass::lower), m.rmse_lower);
    row("every", rep.test_examples, m.rmse_every);
    for (const auto& g : m.by_truth)
      out << name << '\t' << bound_class_name(g.cls) << '\t' << std::setprecision(17) << g.truth << '\t' << g.count
          << '\t' << g.rmse << '\n';
  }
}

/// Prediction dump: `user,item,estimate,method,is_fallback`.
inline void write_predictions_csv(std::ostream& out, const EvaluationReport& rep, const RatingMatrix& train) {
  out << "user,item,estimate,method,is_fallback\n";
  for (const auto& p : rep.predictions)
    for (std::size_t s = 0; s < rep.methods.size(); ++s) {
      if (!p.estimate[s]) continue;
      out << train.users().name(p.test.user) << ',' << train.items().name(p.test.item) << ','
          << format_rating(*p.estimate[s]) << ',' << method_name(rep.methods[s].method) << ','
          << (p.fallback[s] ? 1 : 0) << '\n';
    }
}

/// Human-readable table shaped like All / Higher / Lower rows by method columns.
inline std::string format_rmse_table(const EvaluationReport& rep) {
  std::ostringstream os;
  auto cell = [&](const std::optional<double>& v) {
    std::ostringstream c;
    if (v)
      c << std::fixed << std::setprecision(3) << *v;
    else
      c << "-";
    return c.str();
  };
  os << std::left << std::setw(8) << "";
  for (const auto& m : rep.methods) os << std::right << std::setw(10) << method_name(m.method);
  os << '\n';
  const std::pair<const char*, std::optional<double> MethodReport::*> rows[] = {
      {"All", &MethodReport::rmse_bound}, {"Higher", &MethodReport::rmse_higher}, {"Lower", &MethodReport::rmse_lower}};
  for (const auto& [label, field] : rows) {
    os << std::left << std::setw(8) << label;
    for (const auto& m : rep.methods) os << std::right << std::setw(10) << cell(m.*field);
    os << '\n';
  }
  bool any_every = false;
  for (const auto& m : rep.methods) any_every = any_every || m.rmse_every.has_value();
  if (any_every) {
    os << std::left << std::setw(8) << "Every";
    for (const auto& m : rep.methods) os << std::right << std::setw(10) << cell(m.rmse_every);
    os << '\n';
  }
  return os.str();
}

}  // namespace sfr
