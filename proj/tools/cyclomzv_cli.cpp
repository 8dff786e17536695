// Command-line front end: compute single coefficient values, emit the
// canonical depth-2 value table, or run the verification suites.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/domain error,
// 3 precision failure (a limit could not be certified at the threshold).

#include "cyclomzv/bernoulli.hpp"
#include "cyclomzv/ode.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

using namespace cmzv;
using nlohmann::json;

namespace {

json value_json(const ZqRing& R, const Kq& v, int max_digits) {
  json out;
  if (!v.attached() || v.is_zero()) {
    out["zero_to_precision"] = true;
    out["valuation_at_least"] = v.attached() ? v.abs_prec() : (1L << 40);
    out["certified_digits"] = v.attached() ? v.abs_prec() : (1L << 40);
    out["digits"] = json::array();
    return out;
  }
  Kq n = v;
  n.normalize();
  out["zero_to_precision"] = false;
  out["valuation"] = n.shift();
  out["certified_digits"] = v.abs_prec();
  int count = int(std::min<long>(n.unit().prec(), max_digits));
  json digs = json::array();
  for (const auto& d : R.digits(n.unit(), count)) digs.push_back(d);
  out["digits"] = digs;  // little-endian from the valuation; each entry has f residues
  return out;
}

std::string value_text(const ZqRing& R, const Kq& v, int max_digits) {
  json j = value_json(R, v, max_digits);
  if (j["zero_to_precision"].get<bool>())
    return "0 (to precision " + std::to_string(j["valuation_at_least"].get<long>()) + ")";
  std::string s = "val=" + std::to_string(j["valuation"].get<long>()) + " digits=[";
  bool first = true;
  for (const auto& d : j["digits"]) {
    if (!first) s += " ";
    first = false;
    if (d.size() == 1) {
      s += std::to_string(d[0].get<long>());
    } else {
      s += "(";
      for (size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i].get<long>());
      s += ")";
    }
  }
  s += "] certified=" + std::to_string(j["certified_digits"].get<long>());
  return s;
}

struct SuiteReport {
  std::vector<OdeAudit> audits;
  void add(std::string kind, std::string what, bool pass, long sig, long threshold,
           std::string detail = "") {
    OdeAudit a;
    a.kind = std::move(kind);
    a.word = std::move(what);
    a.pass = pass;
    a.worst_sig_digits = sig;
    a.threshold = int(threshold);
    a.detail = std::move(detail);
    audits.push_back(std::move(a));
  }
};

void suite_padic(MzvEngine& eng, SuiteReport& rep) {
  auto R = eng.ring_ptr();
  const int W = R->work_prec();
  const long p = eng.config().p, M = eng.config().M;
  std::mt19937_64 rng(1);
  bool ok = true;
  for (int it = 0; it < 50 && ok; ++it) {
    Zq a = R->from_int(Int(rng()), W), b = R->from_int(Int(rng()), W),
       c = R->from_int(Int(rng()), W);
    a *= R->zeta_pow(rng() % M);
    b *= R->zeta_pow(rng() % M);
    ok = ok && ((a * b) * c - a * (b * c)).is_zero() && (a * b - b * a).is_zero() &&
         ((a + b) * c - (a * c + b * c)).is_zero();
  }
  rep.add("padic", "ring axioms (randomized)", ok, ok ? W : 0, 1);
  Zq zM = R->pow(R->zeta_pow(1), Int(M));
  rep.add("padic", "zeta^M = 1", (zM - R->one()).is_zero(), W, 1);
  bool idx = true;
  for (long i = 1; i <= M; ++i)
    idx = idx && R->params().underbar(R->params().bar(i)) == i &&
          R->params().bar(R->params().underbar(i)) == i;
  rep.add("padic", "index maps are inverse bijections", idx, idx, 1);
  bool vsc = true;
  for (unsigned k = 2; k <= 30; k += 2) vsc = vsc && val_p(bernoulli(k), p) >= -1;
  rep.add("padic", "Bernoulli denominators (even k <= 30)", vsc, vsc, 1);
  bool fh = true;
  for (int it = 0; it < 10; ++it) {
    unsigned jj = unsigned(rng() % 9);
    long n = 1 + long(rng() % 1000);
    Rat brute(0);
    for (long m2 = 1; m2 <= n; ++m2) {
      Int t;
      mpz_ui_pow_ui(t.get_mpz_t(), m2, jj);
      brute += Rat(t);
    }
    fh = fh && faulhaber_sum(jj, Int(n)) == brute;
  }
  rep.add("padic", "sum-of-powers formula vs brute force", fh, fh, 1);
  bool lg = true;
  for (int it = 0; it < 6; ++it) {
    Zq u = R->from_int(Int(1 + p * long(rng() % 100000)), W);
    Zq v = R->from_int(Int(1 + p * long(rng() % 100000)), W);
    Zq luv = R->iwasawa_log(R->mul(u, v));
    lg = lg && agree_sig(Kq(luv), Kq(R->iwasawa_log(u) + R->iwasawa_log(v)), W / 2);
  }
  rep.add("padic", "logarithm is additive on products", lg, lg, 1);
}

void suite_sums(MzvEngine& eng, SuiteReport& rep, int n_random) {
  auto R = eng.ring_ptr();
  const long p = eng.config().p, M = eng.config().M;
  std::mt19937_64 rng(7);
  // brute-force oracle
  long worst = 1L << 40;
  bool ok = true;
  for (int done = 0; done < n_random; ++done) {
    SumSpec sp;
    int k = 1 + int(rng() % 3);
    for (int j = 0; j < k; ++j) {
      sp.s.push_back(1 + int(rng() % 3));
      sp.idx.push_back(1 + long(rng() % M));
    }
    sp.alpha_n = unsigned(rng() % (1u << k));
    sp.alpha_d = unsigned(rng() % (1u << k));
    sp.restrict_first = rng() % 2;
    long n = 1 + long(rng() % 60);
    Kq fast = eval_F(R, sp, n);
    // naive nested loops
    Kq slow;
    {
      std::vector<long> ub(k), nv(k);
      for (int j = 0; j < k; ++j) ub[j] = R->params().underbar(sp.idx[j]);
      std::function<void(int, long)> rec = [&](int lvl, long lo) {
        if (lvl == k) {
          long prev = 0;
          for (int j = 0; j < k; ++j) {
            long m2 = nv[j];
            if (j == 0 && sp.restrict_first && m2 % p == 0) return;
            if ((sp.alpha_n >> j & 1) && m2 % p != 0) return;
            if ((sp.alpha_d >> j & 1) && (m2 - prev) % p != 0) return;
            prev = m2;
          }
          Kq term{R->one()};
          long ze = 0;
          for (int j = 0; j < k; ++j) ze = (ze + ub[j] % M * (nv[j] % M)) % M;
          term *= Kq(R->zeta_pow(ze));
          for (int j = 0; j < k; ++j)
            for (int t = 0; t < sp.s[j]; ++t) term.div_by_int(Int(nv[j]));
          slow += term;
          return;
        }
        for (long m2 = lo + 1; m2 < n - (k - 1 - lvl); ++m2) {
          nv[lvl] = m2;
          rec(lvl + 1, m2);
        }
      };
      rec(0, 0);
      if (!slow.attached()) slow = Kq(R->zero(R->work_prec()));
      slow.mul_pk(sp.weight());
    }
    ok = ok && indistinguishable(fast, slow);
  }
  rep.add("sums", "prefix-sum evaluation vs nested loops (" + std::to_string(n_random) + " specs)",
          ok, ok ? (1L << 40) : 0, 1);
  // X(t; M) vanishes
  bool zok = true;
  long zworst = 1L << 40;
  for (int t = 1; t <= 3; ++t) {
    LimitResult L = eng.x_result(SumSpec::F1(t, M));
    long v = !L.value.attached() ? (1L << 40)
             : L.value.is_zero() ? L.value.abs_prec()
                                 : L.value.valuation();
    zok = zok && L.certified_digits >= eng.config().threshold && v >= L.certified_digits;
    zworst = std::min(zworst, v);
  }
  rep.add("sums", "trivial-character limits vanish (t <= 3)", zok, zworst,
          eng.config().threshold);
  // F closed form at p | n
  long q = R->params().q.get_si();
  bool fok = true;
  long fworst = 1L << 40;
  for (int t = 1; t <= 3; ++t)
    for (long i = 1; i < M; ++i)
      for (long n : {p * q, 2 * p * q, q * q}) {
        Kq direct = eval_F(R, SumSpec::F1(t, i), n, &eng);
        Kq closed = eng.F_closed_form(t, i, n);
        long sig = agreement_sig_digits(direct, closed);
        fworst = std::min(fworst, sig);
        fok = fok && sig >= eng.config().threshold;
      }
  rep.add("sums", "closed form for the divisible points vs direct sums", fok, fworst,
          eng.config().threshold);
}

void suite_shuffle(MzvEngine& eng, SuiteReport& rep) {
  for (long i = 1; i <= eng.config().M; ++i) {
    const NCSeries& g = eng.build_g(i, std::min(eng.config().word_cap, 4));
    auto grep = is_grouplike(g, eng.config().threshold, 4);
    const ShuffleFill& fill = eng.build_report(i, std::min(eng.config().word_cap, 4));
    bool pass = grep.pass && fill.consistent;
    rep.add("shuffle", "series " + std::to_string(i) + " group-like + closed-form consistency",
            pass, std::min(grep.worst_sig_digits, fill.worst_consistency_sig),
            eng.config().threshold,
            "worst pair " + grep.worst_u.str() + " | " + grep.worst_v.str());
  }
}

void suite_dual(MzvEngine& eng, SuiteReport& rep) {
  const long M = eng.config().M;
  long worst = 1L << 40;
  bool ok = true;
  for (long j = 1; j <= M; ++j)
    for (long i = 1; i <= M; ++i) {
      if (i == j) continue;
      for (int s = 1; s <= 4; ++s) {
        long sig =
            agreement_sig_digits(eng.depth1_usual(j, i, s).value, eng.depth1_alt(j, i, s + 1).value);
        worst = std::min(worst, sig);
        ok = ok && sig >= eng.config().threshold;
      }
    }
  rep.add("dual", "averaged ladder vs direct ladder, depth 1 (s <= 4)", ok, worst,
          eng.config().threshold);
  worst = 1L << 40;
  ok = true;
  for (long j = 1; j <= M; ++j)
    for (long i = 1; i <= M; ++i) {
      if (i == j) continue;
      long sig = agreement_sig_digits(eng.g_single(j, i).value, eng.g_single_limit(j, i).value);
      worst = std::min(worst, sig);
      ok = ok && sig >= eng.config().threshold;
    }
  rep.add("dual", "letter values: logarithm form vs ladder form", ok, worst,
          eng.config().threshold);
}

void suite_ode_match(MzvEngine& eng, SuiteReport& rep, long n_max) {
  OdeAuditor aud(eng);
  const long M = eng.config().M;
  for (int s = 1; s <= 3; ++s)
    for (long i = 1; i <= M; ++i) {
      OdeAudit a = aud.match_depth1(s, i, n_max);
      a.detail += " depth1 s=" + std::to_string(s) + " i=" + std::to_string(i);
      rep.audits.push_back(std::move(a));
    }
  for (long j = 1; j <= M; ++j)
    for (long k = 1; k <= M; ++k) {
      if (j == k) continue;
      for (int t = 1; t + 1 <= 4; ++t)
        for (int s = 1; s + t <= 4; ++s) {
          OdeAudit a = aud.match_two_tails(j, t, k, s, n_max);
          rep.audits.push_back(std::move(a));
        }
    }
  if (M >= 3) {
    for (long i = 1; i <= M; ++i)
      for (long j = 1; j <= M; ++j)
        for (long k = 1; k <= M; ++k) {
          if (i == j || j == k || i == k) continue;
          rep.audits.push_back(aud.match_triple(i, j, k, n_max));
          for (auto [s, t] : {std::pair<int, int>{1, 2}, {2, 1}, {2, 2}}) {
            rep.audits.push_back(aud.match_full(i, j, s, k, t, n_max));
          }
        }
  }
}

void suite_residue(MzvEngine& eng, SuiteReport& rep, int rungs) {
  OdeAuditor aud(eng);
  for (auto& a : aud.residue_identity(3, rungs)) rep.audits.push_back(std::move(a));
}

void suite_funprop(MzvEngine& eng, SuiteReport& rep, int rungs) {
  OdeAuditor aud(eng);
  const long M = eng.config().M;
  if (M < 3) return;
  for (long i = 1; i <= M; ++i)
    for (long j = 1; j <= M; ++j)
      for (long k = 1; k <= M; ++k) {
        if (i == j || j == k || i == k) continue;
        Word w;
        w.a = {uint8_t(i), uint8_t(j), 0, uint8_t(k), 0};
        for (auto& a : aud.funprop(w, rungs)) rep.audits.push_back(std::move(a));
      }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cyclotomic p-adic multi-zeta values of depth <= 2"};
  app.require_subcommand(1);
  app.fallthrough();

  long p = 2, M = 3, base = 1;
  int precision = 40, word_cap = 5, threshold = 4, threads = 1;
  long term_budget = 1000000;
  std::string word_str, format = "text", variant = "k-i";
  int st_bound = 4;
  long match_n = 2000;
  int rungs = 5;
  std::vector<std::string> suites;

  app.add_option("--p", p, "prime p (not dividing M)")->capture_default_str();
  app.add_option("--M", M, "modulus M >= 1")->capture_default_str();
  app.add_option("--precision", precision, "certification target, p-adic digits")
      ->capture_default_str();
  app.add_option("--term-budget", term_budget, "summation ladders stay below this many terms")
      ->capture_default_str();
  app.add_option("--word-cap", word_cap, "series word-length cap")->capture_default_str();
  app.add_option("--threshold", threshold, "certified-digit floor for audits")
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads for table rows")->capture_default_str();
  app.add_option("--format", format, "output format: text | json")->capture_default_str();
  app.add_option("--variant", variant, "index reading of the conditioned ingredient: k-i | k-j")
      ->capture_default_str();

  auto* cmd_compute = app.add_subcommand("compute", "compute one coefficient value");
  cmd_compute->add_option("--base", base, "series index i (the g_i being probed)")->required();
  cmd_compute->add_option("--word", word_str, "word, e.g. \"e2 e0^1 e3 e0^1\"")->required();

  auto* cmd_table = app.add_subcommand("table", "emit canonical depth-2 values as JSON lines");
  cmd_table->add_option("--st-bound", st_bound, "emit rows with s + t <= bound")
      ->capture_default_str();

  auto* cmd_verify = app.add_subcommand("verify", "run verification suites");
  cmd_verify->add_option("--suite", suites,
                         "padic | sums | shuffle | dual | ode-match | residue | funprop | all");
  cmd_verify->add_option("--match-n", match_n, "coefficient-match degree bound")
      ->capture_default_str();
  cmd_verify->add_option("--rungs", rungs, "ladder rungs for the limit checks")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  EngineConfig cfg;
  cfg.p = p;
  cfg.M = M;
  cfg.digits = precision;
  cfg.term_budget = term_budget;
  cfg.word_cap = word_cap;
  cfg.threshold = threshold;
  if (variant == "k-j") cfg.variant = IndexVariant::KMinusJ;
  else if (variant != "k-i") {
    std::cerr << "unknown --variant\n";
    return 2;
  }

  try {
    MzvEngine eng(cfg);
    const ZqRing& R = eng.ring();

    if (cmd_compute->parsed()) {
      if (base < 1 || base > M) {
        std::cerr << "domain error: base must lie in 1.." << M << "\n";
        return 2;
      }
      Word w;
      try {
        w = Word::parse(word_str);
      } catch (const std::exception& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
      }
      for (uint8_t l : w.a)
        if (l > M) {
          std::cerr << "domain error: letter e" << int(l) << " outside 0.." << M << "\n";
          return 2;
        }
      if (int(w.size()) > word_cap) {
        std::cerr << "domain error: word longer than --word-cap\n";
        return 2;
      }
      MzvValue v = eng.coefficient(base, w);
      bool certified = !v.value.attached() || v.value.is_zero() ||
                       v.significant_digits() >= threshold || v.certified_digits >= precision;
      json out;
      out["p"] = p;
      out["M"] = M;
      out["base"] = base;
      out["word"] = w.str();
      out["value"] = value_json(R, v.value, precision);
      out["provenance"] = v.provenance;
      out["ingredients"] = v.ingredients;
      if (format == "json") {
        std::cout << out.dump() << "\n";
      } else {
        std::cout << "g_" << base << "[" << w.str() << "] = " << value_text(R, v.value, precision)
                  << "\n  provenance: " << v.provenance << "\n";
      }
      if (!certified) {
        std::cerr << "precision failure: certified digits below threshold\n";
        return 3;
      }
      return 0;
    }

    if (cmd_table->parsed()) {
      struct Row {
        long i, j, k;
        int s, t;
      };
      std::vector<Row> rows;
      for (long i = 1; i <= M; ++i)
        for (long j = 1; j <= M; ++j)
          for (long k = 1; k <= M; ++k) {
            if (i == j || j == k || i == k) continue;
            for (int s = 1; s <= st_bound - 1; ++s)
              for (int t = 1; s + t <= st_bound; ++t) rows.push_back({i, j, k, s, t});
          }
      std::vector<std::string> outputs(rows.size());
      std::atomic<size_t> next{0};
      auto worker = [&]() {
        for (;;) {
          size_t idx = next.fetch_add(1);
          if (idx >= rows.size()) return;
          const Row& r = rows[idx];
          auto v = eng.canonical2(r.i, r.j, r.s, r.k, r.t);
          json out;
          out["base"] = r.i;
          out["word"] = Word::canonical2(r.j, r.s, r.k, r.t).str();
          out["s"] = r.s;
          out["t"] = r.t;
          out["j"] = r.j;
          out["k"] = r.k;
          if (v) {
            out["value"] = value_json(R, v->value, precision);
            out["provenance"] = v->provenance;
          } else {
            out["value"] = nullptr;
          }
          outputs[idx] = out.dump();
        }
      };
      std::vector<std::thread> pool;
      for (int t2 = 0; t2 < std::max(threads, 1); ++t2) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      for (auto& s2 : outputs) std::cout << s2 << "\n";
      return 0;
    }

    if (cmd_verify->parsed()) {
      if (suites.empty()) {
        std::cerr << "usage error: no suite selected\n";
        return 2;
      }
      SuiteReport rep;
      for (const std::string& s2 : suites) {
        if (s2 == "padic" || s2 == "all") suite_padic(eng, rep);
        if (s2 == "sums" || s2 == "all") suite_sums(eng, rep, 60);
        if (s2 == "shuffle" || s2 == "all") suite_shuffle(eng, rep);
        if (s2 == "dual" || s2 == "all") suite_dual(eng, rep);
        if (s2 == "ode-match" || s2 == "all") suite_ode_match(eng, rep, match_n);
        if (s2 == "residue" || s2 == "all") suite_residue(eng, rep, rungs + 4);
        if (s2 == "funprop" || s2 == "all") suite_funprop(eng, rep, rungs);
        if (s2 != "padic" && s2 != "sums" && s2 != "shuffle" && s2 != "dual" &&
            s2 != "ode-match" && s2 != "residue" && s2 != "funprop" && s2 != "all") {
          std::cerr << "usage error: unknown suite '" << s2 << "'\n";
          return 2;
        }
      }
      const OdeAudit* first_fail = nullptr;
      for (const auto& a : rep.audits) {
        if (format == "json") std::cout << a.to_json() << "\n";
        else
          std::cout << (a.pass ? "[PASS] " : (a.inconclusive ? "[????] " : "[FAIL] ")) << a.kind
                    << ": " << a.word << (a.l ? " (l=" + std::to_string(a.l) + ")" : "")
                    << " [agreement " << a.worst_sig_digits << ", threshold " << a.threshold
                    << "]" << (a.detail.empty() ? "" : " " + a.detail) << "\n";
        if (!a.pass && !first_fail) first_fail = &a;
      }
      if (first_fail) {
        std::cerr << "verification failed first at: " << first_fail->to_json() << "\n";
        return 1;
      }
      return 0;
    }
  } catch (const PrecisionError& e) {
    std::cerr << "precision failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
