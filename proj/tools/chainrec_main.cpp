// chainrec: classify countable-state Markov chains as recurrent/transient
// via the drift-rate criterion, cross-checked by first-passage and Monte
// Carlo oracles, with balance-system verification on truncations.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chainrec/chain.hpp"
#include "chainrec/criterion.hpp"
#include "chainrec/oracle.hpp"
#include "chainrec/spec_io.hpp"
#include "chainrec/verifier.hpp"

namespace fs = std::filesystem;
using namespace chainrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitAssumptionViolated = 2;
constexpr int kExitInconclusive = 3;

struct CommonOpts {
  std::string spec_path;
  std::string builtin;
  std::string eps, lambda, mu, q, p;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  auto* spec = cmd->add_option("--spec", o.spec_path, "chain spec file (JSON)");
  auto* builtin = cmd->add_option("--builtin", o.builtin, "builtin chain name");
  spec->excludes(builtin);
  cmd->add_option("--eps", o.eps, "epsilon parameter (rational or decimal)");
  cmd->add_option("--lambda", o.lambda, "lambda parameter");
  cmd->add_option("--mu", o.mu, "mu parameter");
  cmd->add_option("--q", o.q, "bd builtin: down probabilities, comma list, last repeats");
  cmd->add_option("--p", o.p, "bd builtin: up probabilities (default 1-q)");
  cmd->add_option("--out", o.out_dir, "output directory for report/tables");
}

std::vector<Rational> parse_rational_list(const std::string& s) {
  std::vector<Rational> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(Rational::parse(tok));
  return out;
}

ChainSpec build_spec(const CommonOpts& o) {
  if (!o.spec_path.empty()) return load_spec_file(o.spec_path);
  if (o.builtin.empty())
    throw std::invalid_argument("one of --spec or --builtin is required");
  if (!o.p.empty() && o.q.empty())
    throw std::invalid_argument("--p requires --q");
  if (o.builtin == "bd" && !o.q.empty()) {
    std::vector<Rational> qs = parse_rational_list(o.q);
    RationalSeq q;
    q.head.assign(qs.begin(), qs.end() - 1);
    q.cycle = {qs.back()};
    if (!o.p.empty()) {
      std::vector<Rational> ps = parse_rational_list(o.p);
      if (ps.size() != qs.size())
        throw std::invalid_argument("--q and --p lists must have equal length");
      for (size_t i = 0; i < qs.size(); ++i)
        if (qs[i] + ps[i] != Rational(1))
          throw std::invalid_argument("q_i + p_i must equal 1 at position " +
                                      std::to_string(i + 1));
    }
    return make_bd_spec(q);
  }
  std::map<std::string, Rational> params;
  if (!o.eps.empty()) params["eps"] = Rational::parse(o.eps);
  if (!o.lambda.empty()) params["lambda"] = Rational::parse(o.lambda);
  if (!o.mu.empty()) params["mu"] = Rational::parse(o.mu);
  if (!o.q.empty()) params["q"] = Rational::parse(o.q);
  return make_builtin(o.builtin, params);
}

std::ofstream open_report(const CommonOpts& o) {
  fs::create_directories(o.out_dir);
  fs::path p = fs::path(o.out_dir) / "report.txt";
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string art_path(const CommonOpts& o, const char* name) {
  return (fs::path(o.out_dir) / name).string();
}

void describe_validation(std::ostream& os, const ValidationReport& v) {
  os << "validation:\n"
     << "  stochastic:        " << (v.stochastic ? "yes" : "NO")
     << " (worst row-sum deviation " << v.worst_row_sum_deviation << ")\n"
     << "  connected domain:  " << (v.connected_domain ? "yes" : "NO") << "\n";
  if (!v.witnesses.empty()) {
    os << "  zero-entry witnesses (i,k):";
    for (const auto& [i, k] : v.witnesses) os << " (" << i << "," << k << ")";
    os << "\n";
  }
  os << "  lazy epsilon:      inf(1-p_ii) = " << v.lazy_epsilon
     << (v.lazy_ok ? " (> eps)" : " (NOT > eps)") << "\n"
     << "  sum j*p_{0,j}:     " << v.e0_plus << "\n"
     << "  checked range:     0.." << v.checked_range << "\n";
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::Recurrent:
    case Verdict::Transient: return kExitOk;
    case Verdict::Inconclusive: return kExitInconclusive;
    case Verdict::AssumptionViolated: return kExitAssumptionViolated;
  }
  return kExitOk;
}

int cmd_validate(const CommonOpts& o, double eps, long depth) {
  ChainSpec spec = build_spec(o);
  ValidationReport v = validate(spec, eps, depth);
  std::ofstream rep = open_report(o);
  rep << "chain: " << spec.name << "\n";
  describe_validation(rep, v);
  describe_validation(std::cout, v);
  return v.ok() ? kExitOk : kExitAssumptionViolated;
}

int cmd_classify(const CommonOpts& o, const ClassifyConfig& cfg) {
  ChainSpec spec = build_spec(o);
  Classification cls = classify_chain(spec, cfg);
  std::ofstream rep = open_report(o);
  auto describe = [&](std::ostream& os) {
    os << "chain: " << spec.name << "\n"
       << "verdict: " << to_string(cls.verdict) << "\n"
       << "test fired: " << to_string(cls.test_fired) << "\n";
    if (cls.series_verdict && cls.verdict == Verdict::AssumptionViolated)
      os << "series verdict (hypotheses violated, diagnostic only): "
         << to_string(*cls.series_verdict) << "\n";
    for (const auto& n : cls.notes) os << "note: " << n << "\n";
  };
  describe(rep);
  describe(std::cout);
  if (!cls.trace.empty()) {
    rep << "log t_n at n_max: " << cls.log_t_final
        << ", log partial sum: " << cls.log_sum_final << "\n";
  }
  describe_validation(rep, cls.validation);
  try {
    BirthDeathChain bd = associated_birth_death(reduce_lazy(spec), cfg.drift_tol);
    rep << "associated birth-death chain (q_i, exact):\n";
    for (long i = 1; i <= (long)bd.q.head.size(); ++i)
      rep << "  q_" << i << " = " << bd.q_at(i).str() << "\n";
    rep << "  then cycling:";
    for (const auto& r : bd.q.cycle) rep << " " << r.str();
    rep << "\n";
  } catch (const std::exception& e) {
    rep << "associated birth-death chain unavailable: " << e.what() << "\n";
  }
  write_trace_csv(art_path(o, "trace.csv"), cls.trace);
  return verdict_exit(cls.verdict);
}

int cmd_oracle(const CommonOpts& o, const std::vector<long>& levels, long trials,
               long horizon, std::uint64_t seed) {
  ChainSpec spec = build_spec(o);
  OracleReport rep = oracle_classify(spec, levels);
  if (trials > 0) rep.mc = mc_return(spec, trials, horizon, seed);
  std::ofstream out = open_report(o);
  auto describe = [&](std::ostream& os) {
    os << "chain: " << spec.name << "\n"
       << "oracle verdict: " << to_string(rep.verdict) << " (" << rep.rule << ")\n";
    for (size_t i = 0; i < rep.curve.levels.size(); ++i)
      os << "  h(" << rep.curve.levels[i] << ") = " << rep.curve.h[i] << "\n";
    if (rep.mc)
      os << "monte carlo: " << rep.mc->successes << "/" << rep.mc->trials
         << " returns within " << rep.mc->horizon << " steps, Wilson 95% ["
         << rep.mc->wilson_lo << ", " << rep.mc->wilson_hi << "], seed "
         << rep.mc->seed << "\n";
  };
  describe(out);
  describe(std::cout);
  write_ruin_csv(art_path(o, "ruin.csv"), rep.curve);
  if (rep.mc) write_mc_csv(art_path(o, "mc.csv"), *rep.mc);
  return verdict_exit(rep.verdict);
}

int cmd_verify(const CommonOpts& o, long trunc, long range) {
  ChainSpec spec = build_spec(o);
  long span = std::max(spec.max_down_span(), spec.max_up_explicit_span());
  if (range <= 0) range = trunc - span - 1;
  range = std::min(range, trunc - span - 1);

  std::vector<double> Q = stationary_truncated(spec, trunc);
  BalanceReport bal = check_balance_general(spec, Q, 1, range);
  std::vector<double> Q_sys = weighted_balance_solution(spec, trunc);
  BalanceReport bal_sys = check_balance_general(spec, Q_sys, 1, range);
  std::vector<double> P_assoc = assoc_system_solution(spec, trunc);
  SummedEquivalence se = check_summed_equivalence(spec, Q, P_assoc, range);

  std::ofstream out = open_report(o);
  auto describe = [&](std::ostream& os) {
    os << "chain: " << spec.name << " (truncation N=" << trunc
       << ", checked n<=" << range << ")\n"
       << "stationary tail mass near boundary: " << bal.tail_mass << "\n"
       << "weighted-system residual at chain stationary: max " << bal.max_residual
       << "\n"
       << "weighted-system self-consistency (solved directly): max "
       << bal_sys.max_residual << "\n"
       << "summed general system at stationary |LHS-RHS|: " << se.resid_general
       << "\n"
       << "summed birth-death system at its solution |LHS-RHS|: " << se.resid_bd
       << "\n"
       << "rearrangement identities (order swap): up " << se.fubini_up << ", down "
       << se.fubini_down << "\n";
  };
  describe(out);
  describe(std::cout);
  write_balance_csv(art_path(o, "balance.csv"), bal);
  return kExitOk;
}

int cmd_compare(const CommonOpts& o, const ClassifyConfig& cfg,
                const std::vector<long>& levels) {
  ChainSpec spec = build_spec(o);
  Classification cls = classify_chain(spec, cfg);
  OracleReport orc = oracle_classify(spec, levels);
  std::ofstream rep = open_report(o);
  std::string line;
  int code = kExitOk;
  if (cls.verdict == Verdict::AssumptionViolated) {
    std::string why = !cls.validation.connected_domain ? "connected domain violated"
                      : !cls.validation.lazy_ok        ? "lazy hypothesis violated"
                                                       : "stochasticity violated";
    line = "CRITERION-INAPPLICABLE (" + why + "); oracle: " +
           to_string(orc.verdict);
    code = kExitAssumptionViolated;
  } else if (cls.verdict == Verdict::Inconclusive ||
             orc.verdict == Verdict::Inconclusive) {
    line = std::string("INCONCLUSIVE; criterion: ") + to_string(cls.verdict) +
           ", oracle: " + to_string(orc.verdict);
    code = kExitInconclusive;
  } else if (cls.verdict == orc.verdict) {
    line = std::string("AGREE: ") + to_string(cls.verdict);
  } else {
    line = std::string("DISAGREE: criterion ") + to_string(cls.verdict) +
           ", oracle " + to_string(orc.verdict);
  }
  rep << "chain: " << spec.name << "\n" << line << "\n";
  describe_validation(rep, cls.validation);
  std::cout << line << "\n";
  write_trace_csv(art_path(o, "trace.csv"), cls.trace);
  write_ruin_csv(art_path(o, "ruin.csv"), orc.curve);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recurrence/transience analysis of countable-state Markov chains"};
  app.require_subcommand(1);

  CommonOpts o_validate, o_classify, o_oracle, o_verify, o_compare;
  ClassifyConfig ccfg, ccfg_cmp;
  double val_eps = 1e-6;
  long val_depth = 0;
  std::vector<long> levels, levels_cmp;
  long trials = 0, horizon = 1000000;
  std::uint64_t seed = 1;
  long trunc = 80, range = 0;

  auto* v = app.add_subcommand("validate", "check stochasticity and the classification hypotheses");
  add_common(v, o_validate);
  v->add_option("--hyp-eps", val_eps, "lazy-hypothesis threshold");
  v->add_option("--depth", val_depth, "states to check explicitly");

  auto* c = app.add_subcommand("classify", "drift-rate criterion classification");
  add_common(c, o_classify);
  c->add_option("--nmax", ccfg.series.n_max, "series terms to examine");
  c->add_option("--window", ccfg.series.window, "trailing decision window");
  c->add_option("--delta", ccfg.series.delta, "bounded-below floor");
  c->add_option("--ratio-margin", ccfg.series.ratio_margin, "geometric-rule margin");
  c->add_option("--raabe-margin", ccfg.series.raabe_margin, "Raabe/slope margin");
  c->add_option("--hyp-eps", ccfg.eps, "lazy-hypothesis threshold");
  c->add_option("--depth", ccfg.depth, "validation depth");

  auto* r = app.add_subcommand("oracle", "first-passage + Monte Carlo oracle verdict");
  add_common(r, o_oracle);
  r->add_option("--levels", levels, "ruin-curve level grid")->delimiter(',');
  r->add_option("--trials", trials, "Monte Carlo trials (0 = skip)");
  r->add_option("--horizon", horizon, "Monte Carlo step horizon");
  r->add_option("--seed", seed, "Monte Carlo seed");

  auto* f = app.add_subcommand("verify", "balance-system residuals on a truncation");
  add_common(f, o_verify);
  f->add_option("--trunc", trunc, "truncation level N");
  f->add_option("--range", range, "largest n checked (default N - span - 1)");

  auto* m = app.add_subcommand("compare", "criterion vs oracle agreement verdict");
  add_common(m, o_compare);
  m->add_option("--levels", levels_cmp, "ruin-curve level grid")->delimiter(',');
  m->add_option("--nmax", ccfg_cmp.series.n_max, "series terms to examine");
  m->add_option("--hyp-eps", ccfg_cmp.eps, "lazy-hypothesis threshold");

  auto* b = app.add_subcommand("builtin-list", "list builtin chains");

  CLI11_PARSE(app, argc, argv);

  try {
    if (v->parsed()) return cmd_validate(o_validate, val_eps, val_depth);
    if (c->parsed()) return cmd_classify(o_classify, ccfg);
    if (r->parsed()) return cmd_oracle(o_oracle, levels, trials, horizon, seed);
    if (f->parsed()) return cmd_verify(o_verify, trunc, range);
    if (m->parsed()) return cmd_compare(o_compare, ccfg_cmp, levels_cmp);
    if (b->parsed()) {
      std::cout << "builtin chains:\n"
                << "  sec3-ex1                 banded {-1,+1,+2} chain, recurrent\n"
                << "  sec3-ex2                 banded {-1,+1,+2} chain, transient\n"
                << "  sec4-counter-recurrent   period-2 counterexample (--eps), recurrent\n"
                << "  sec4-counter-transient   period-2 counterexample (--eps), transient\n"
                << "  ex1-A                    birth-death chain (--lambda, --mu)\n"
                << "  ex1-B                    twin-birth chain (--lambda, --mu)\n"
                << "  ex2-C                    one-or-three-births chain (--lambda, --mu)\n"
                << "  bd                       birth-death from --q/--p lists or constants\n";
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
