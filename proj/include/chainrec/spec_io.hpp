#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainrec/chain.hpp"
#include "chainrec/oracle.hpp"
#include "chainrec/series.hpp"
#include "chainrec/verifier.hpp"

namespace chainrec {

namespace detail {

inline Rational json_rational(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return Rational::parse(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_number_float()) return rational_from_double(v.get<double>());
  if (v.is_array() && v.size() == 2 && v[0].is_number_integer() &&
      v[1].is_number_integer())
    return Rational(v[0].get<long long>(), v[1].get<long long>());
  throw std::invalid_argument(where + ": expected rational as \"n/d\", number, or [num,den]");
}

inline Row json_row(const nlohmann::json& jr, const std::string& where) {
  Row r;
  if (!jr.is_array()) throw std::invalid_argument(where + ": expected an array of entries");
  for (size_t e = 0; e < jr.size(); ++e) {
    const auto& je = jr[e];
    std::string ewhere = where + ", entry " + std::to_string(e);
    if (!je.is_array() || (je.size() != 2 && je.size() != 3))
      throw std::invalid_argument(ewhere + ": expected [state, num, den] or [state, value]");
    long target = je[0].get<long>();
    Rational p = je.size() == 3
                     ? Rational(je[1].get<long long>(), je[2].get<long long>())
                     : json_rational(je[1], ewhere);
    r.emplace_back(target, p);
  }
  return r;
}

}  // namespace detail

// Chain-spec document: head_rows as arrays of [state, num, den] triples,
// tail_stencil either one stencil (array of [offset, num, den]) or a cyclic
// list of stencils, optional params map. A geometric upward tail is declared
// through params c and r (entries c*r^d beyond the explicit offsets).
inline ChainSpec load_spec_json(const nlohmann::json& j, const std::string& src) {
  if (!j.is_object()) throw std::invalid_argument(src + ": top level must be an object");

  std::map<std::string, Rational> params;
  if (j.contains("params")) {
    if (!j["params"].is_object())
      throw std::invalid_argument(src + ": params must be an object");
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
      params[it.key()] = detail::json_rational(it.value(), src + ": params." + it.key());
  }
  if (j.contains("builtin")) {
    return make_builtin(j["builtin"].get<std::string>(), params);
  }

  std::vector<Row> head;
  if (j.contains("head_rows")) {
    const auto& hr = j["head_rows"];
    if (!hr.is_array()) throw std::invalid_argument(src + ": head_rows must be an array");
    for (size_t i = 0; i < hr.size(); ++i)
      head.push_back(detail::json_row(hr[i], src + ": head_rows[" + std::to_string(i) + "]"));
  }

  std::vector<Stencil> tail;
  if (j.contains("tail_stencil")) {
    const auto& ts = j["tail_stencil"];
    if (!ts.is_array()) throw std::invalid_argument(src + ": tail_stencil must be an array");
    bool list_of_stencils = !ts.empty() && ts[0].is_array() && !ts[0].empty() &&
                            ts[0][0].is_array();
    auto parse_stencil = [&](const nlohmann::json& js, const std::string& where) {
      Stencil s;
      Row offsets = detail::json_row(js, where);
      for (const auto& [d, p] : offsets) s.entries.emplace_back(d, p);
      if (params.count("c") && params.count("r")) {
        s.has_geo_tail = true;
        s.geo_c = params.at("c");
        s.geo_r = params.at("r");
      }
      return s;
    };
    if (list_of_stencils) {
      for (size_t m = 0; m < ts.size(); ++m)
        tail.push_back(parse_stencil(ts[m], src + ": tail_stencil[" + std::to_string(m) + "]"));
    } else if (!ts.empty()) {
      tail.push_back(parse_stencil(ts, src + ": tail_stencil"));
    }
  }
  std::string name = j.contains("name") ? j["name"].get<std::string>() : src;
  return make_spec(std::move(head), std::move(tail), std::move(params), name);
}

inline ChainSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("spec file '" + path + "': " + e.what());
  }
  return load_spec_json(j, path);
}

// --- deterministic table writers -------------------------------------------

namespace detail {

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_trace_csv(const std::string& path,
                            const std::vector<TracePoint>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n,log_t,log_sum\n";
  for (const auto& tp : trace)
    out << tp.n << ',' << detail::fmt_g17(tp.log_t) << ','
        << detail::fmt_g17(tp.log_sum) << '\n';
}

inline void write_ruin_csv(const std::string& path, const RuinCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "L,h,one_minus_h\n";
  for (size_t i = 0; i < curve.levels.size(); ++i)
    out << curve.levels[i] << ',' << detail::fmt_g17(curve.h[i]) << ','
        << detail::fmt_g17(1.0 - curve.h[i]) << '\n';
}

inline void write_balance_csv(const std::string& path, const BalanceReport& rep) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "n,lhs,rhs,residual\n";
  if (rep.boundary_checked)
    out << 0 << ",,," << detail::fmt_g17(rep.boundary_residual) << '\n';
  for (size_t i = 0; i < rep.n.size(); ++i)
    out << rep.n[i] << ',' << detail::fmt_g17(rep.lhs[i]) << ','
        << detail::fmt_g17(rep.rhs[i]) << ',' << detail::fmt_g17(rep.residual[i])
        << '\n';
}

inline void write_mc_csv(const std::string& path, const McSummary& mc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "trials,successes,lo,hi,seed\n";
  out << mc.trials << ',' << mc.successes << ',' << detail::fmt_g17(mc.wilson_lo)
      << ',' << detail::fmt_g17(mc.wilson_hi) << ',' << mc.seed << '\n';
}

}  // namespace chainrec
