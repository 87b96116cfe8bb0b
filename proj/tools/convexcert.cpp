// Command-line front end: certify, hessian, dcp, check and batch.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "convexcert/pipeline.hpp"
#include "json.hpp"

using namespace convexcert;
using nlohmann::json;

namespace {

enum Exit { kConvex = 0, kConcave = 1, kUnknown = 2, kWitness = 3, kInputError = 4 };

struct Flags {
  std::string expression;
  std::string assume;
  std::string dims;
  std::string wrt;
  std::string method = "hessian";
  bool json = false;
  bool dump_dag = false;
  bool dump_hessian = false;
  bool falsify = false;
  std::uint64_t seed = 1;
  int trials = 200;
  bool extended = false;
  bool compare_dcp = false;
  std::string file;
};

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Convex:
    case Verdict::Affine: return kConvex;
    case Verdict::Concave: return kConcave;
    case Verdict::NonConvexWitness: return kWitness;
    case Verdict::Unknown: return kUnknown;
  }
  return kUnknown;
}

void report_input_error(const InputError& e, const std::string& source) {
  std::cerr << "error: " << e.what() << "\n";
  if (e.position && *e.position <= source.size()) {
    std::cerr << "  " << source << "\n  " << std::string(*e.position, ' ') << "^\n";
  }
}

SampleConfig sample_config(const Flags& f) {
  SampleConfig c;
  c.trials = f.trials;
  c.seed = f.seed;
  return c;
}

// Runs the oracle on an unknown verdict and upgrades it when a negative
// eigenvalue turns up.
void falsify(Certificate& c, const Prepared& p, const Flags& f) {
  if (c.verdict != Verdict::Unknown) return;
  SamplingReport r = sample_hessian(p, sample_config(f), true);
  if (r.witness) {
    c.verdict = Verdict::NonConvexWitness;
    c.witness = r.witness;
  }
}

void print(const std::vector<Certificate>& certs, const Prepared& p, const Flags& f, NodeId hessian,
           const std::optional<SamplingReport>& sampling) {
  if (f.json) {
    json out = json::array();
    for (const Certificate& c : certs) {
      json j = json::parse(c.to_json());
      if (f.dump_dag) j["dag"] = json::parse(p.dag.dump_json());
      if (f.dump_hessian && c.method == Method::Dcp) j["hessian"] = render_node(*p.dag.dag, hessian);
      if (sampling) {
        j["sampling"] = {{"samples", sampling->samples},
                         {"min_eigenvalue", sampling->samples ? json(sampling->min_eigenvalue) : json(nullptr)}};
      }
      out.push_back(std::move(j));
    }
    std::cout << (out.size() == 1 ? out[0] : out).dump(2) << "\n";
    return;
  }
  if (f.dump_dag) std::cout << "dag: " << p.dag.dump_json() << "\n";
  for (std::size_t i = 0; i < certs.size(); ++i) {
    if (i) std::cout << "\n";
    if (f.dump_hessian && certs[i].method == Method::Dcp)
      std::cout << "hessian: " << render_node(*p.dag.dag, hessian) << "\n";
    std::cout << certs[i].to_text();
  }
  if (sampling) {
    std::cout << "sampling: " << sampling->samples << " feasible points";
    if (sampling->samples) std::cout << ", smallest eigenvalue " << sampling->min_eigenvalue;
    std::cout << "\n";
  }
}

Problem problem_of(const Flags& f) { return Problem{f.expression, f.assume, f.dims, f.wrt}; }

int run_certify(Flags f, bool check) {
  try {
    Prepared p = prepare(problem_of(f));
    std::vector<Certificate> certs;
    bool hessian = f.method != "dcp", dcp = f.method != "hessian";
    if (hessian) certs.push_back(certify_hessian(p));
    if (dcp) certs.push_back(certify_dcp(p, DcpOptions{f.extended}));
    NodeId h = (f.dump_hessian && !hessian) ? hessian_node(p) : 0;
    std::optional<SamplingReport> sampling;
    if (check) {
      sampling = sample_hessian(p, sample_config(f), true);
      if (sampling->witness)
        for (Certificate& c : certs) {
          c.verdict = Verdict::NonConvexWitness;
          c.witness = sampling->witness;
        }
    } else if (f.falsify) {
      for (Certificate& c : certs) falsify(c, p, f);
    }
    print(certs, p, f, h, sampling);
    // with both methods the hessian verdict decides, unless only dcp certified
    Verdict v = certs[0].verdict;
    if (certs.size() == 2 && v == Verdict::Unknown) v = certs[1].verdict;
    return exit_code(v);
  } catch (const InputError& e) {
    report_input_error(e, f.expression);
    return kInputError;
  }
}

int run_hessian(const Flags& f) {
  try {
    Prepared p = prepare(problem_of(f));
    Builder plain(*p.dag.dag);
    DomainFacts facts = merge_facts(p.facts, harvest_domain_facts(plain, p.dag.root));
    DerivativeResult d = derivatives(p.dag, p.wrt, facts_hint(facts));
    std::string g = render_node(*p.dag.dag, d.gradient), h = render_node(*p.dag.dag, d.hessian);
    if (f.json) {
      json j{{"expression", render_node(*p.dag.dag, p.dag.root)}, {"wrt", p.wrt.name}, {"gradient", g}, {"hessian", h}};
      if (f.dump_dag) j["dag"] = json::parse(p.dag.dump_json());
      std::cout << j.dump(2) << "\n";
    } else {
      if (f.dump_dag) std::cout << "dag: " << p.dag.dump_json() << "\n";
      std::cout << "gradient: " << g << "\nhessian: " << h << "\n";
    }
    return 0;
  } catch (const InputError& e) {
    report_input_error(e, f.expression);
    return kInputError;
  } catch (const NotDifferentiable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

struct BatchLine {
  std::size_t number = 0;
  Problem problem;
  std::string expected;
};

struct BatchResult {
  std::string error;
  std::optional<Verdict> hessian, dcp;
};

int run_batch(const Flags& f) {
  std::ifstream in(f.file);
  if (!in) {
    std::cerr << "error: cannot open " << f.file << "\n";
    return kInputError;
  }
  std::vector<BatchLine> lines;
  std::string text;
  for (std::size_t n = 1; std::getline(in, text); ++n) {
    std::string t = trim(text);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string part; std::getline(ss, part, ';');) parts.push_back(trim(part));
    parts.resize(std::max<std::size_t>(parts.size(), 5));
    lines.push_back(BatchLine{n, Problem{parts[0], parts[1], parts[2], parts[3]}, parts[4]});
  }

  bool hessian = f.method != "dcp", dcp = f.compare_dcp || f.method != "hessian";
  std::vector<BatchResult> results(lines.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < lines.size();) {
      BatchResult& r = results[i];
      try {
        Prepared p = prepare(lines[i].problem);
        if (hessian) r.hessian = certify_hessian(p).verdict;
        if (dcp) r.dcp = certify_dcp(p, DcpOptions{f.extended}).verdict;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  bool mismatch = false, input_error = false;
  std::map<std::string, int> hessian_counts, dcp_counts;
  json rows = json::array();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const BatchLine& l = lines[i];
    const BatchResult& r = results[i];
    if (!r.error.empty()) {
      input_error = true;
      std::cerr << f.file << ":" << l.number << ": error: " << r.error << "\n";
      if (f.json) rows.push_back({{"line", l.number}, {"expression", l.problem.expression}, {"error", r.error}});
      continue;
    }
    // the primary method is the one compared against the expectation
    std::optional<Verdict> primary = hessian ? r.hessian : r.dcp;
    std::string got(verdict_name(*primary));
    bool ok = l.expected.empty() || l.expected == got;
    mismatch = mismatch || !ok;
    if (r.hessian) ++hessian_counts[std::string(verdict_name(*r.hessian))];
    if (r.dcp) ++dcp_counts[std::string(verdict_name(*r.dcp))];
    if (f.json) {
      json row{{"line", l.number}, {"expression", l.problem.expression}, {"expected", l.expected}, {"ok", ok}};
      if (r.hessian) row["hessian"] = verdict_name(*r.hessian);
      if (r.dcp) row["dcp"] = verdict_name(*r.dcp);
      rows.push_back(std::move(row));
      continue;
    }
    std::cout << (ok ? "ok       " : "MISMATCH ") << "line " << l.number << ": ";
    if (r.hessian) std::cout << "hessian " << verdict_name(*r.hessian) << "  ";
    if (r.dcp) std::cout << "dcp " << verdict_name(*r.dcp) << "  ";
    if (!l.expected.empty()) std::cout << "expected " << l.expected << "  ";
    std::cout << l.problem.expression << "\n";
  }
  if (f.json) {
    json summary;
    if (hessian) summary["hessian"] = hessian_counts;
    if (dcp) summary["dcp"] = dcp_counts;
    std::cout << json{{"lines", rows}, {"summary", summary}}.dump(2) << "\n";
  } else {
    std::cout << "summary: " << lines.size() << " lines\n";
    auto row = [](const char* name, const std::map<std::string, int>& counts) {
      std::cout << "  " << name << ":";
      for (const char* v : {"convex", "concave", "affine", "unknown"}) {
        auto it = counts.find(v);
        std::cout << " " << v << " " << (it == counts.end() ? 0 : it->second);
      }
      std::cout << "\n";
    };
    if (hessian) row("hessian", hessian_counts);
    if (dcp) row("dcp    ", dcp_counts);
  }
  if (input_error) return kInputError;
  return mismatch ? kUnknown : kConvex;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convexity certificates for vectorized expressions"};
  app.require_subcommand(1);
  Flags f;
  if (const char* env = std::getenv("CONVEXCERT_SEED")) {
    try {
      f.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: CONVEXCERT_SEED is not an integer\n";
      return kInputError;
    }
  }

  auto common = [&](CLI::App* sub, bool expression) {
    if (expression) sub->add_option("expression", f.expression, "expression to analyze")->required();
    sub->add_option("--assume", f.assume, "assumption clauses, e.g. \"x>0, A>=0\"");
    sub->add_option("--dims", f.dims, "shapes, e.g. \"X:m*n,w:n,y:m\"");
    sub->add_option("--wrt", f.wrt, "differentiation variable (default x)");
    sub->add_flag("--json", f.json, "JSON output");
    sub->add_flag("--dump-dag", f.dump_dag, "print the expression DAG");
    sub->add_option("--seed", f.seed, "sampling seed (default $CONVEXCERT_SEED or 1)");
    sub->add_option("--trials", f.trials, "random samples for the oracle")->check(CLI::PositiveNumber);
    sub->add_flag("--dcp-extended-atoms", f.extended, "add logistic, log_sum_exp, neg_entr, sum_squares, quad_form");
  };
  auto method = [&](CLI::App* sub) {
    sub->add_option("--method", f.method, "hessian, dcp or both")
        ->check(CLI::IsMember({"hessian", "dcp", "both"}));
    sub->add_flag("--dump-hessian", f.dump_hessian, "print the simplified Hessian");
    sub->add_flag("--falsify", f.falsify, "sample for a non-convexity witness when unknown");
  };

  CLI::App* certify = app.add_subcommand("certify", "certify convexity");
  common(certify, true);
  method(certify);
  CLI::App* hessian = app.add_subcommand("hessian", "print gradient and Hessian");
  common(hessian, true);
  CLI::App* dcp = app.add_subcommand("dcp", "disciplined convex programming labels");
  common(dcp, true);
  dcp->add_flag("--dump-hessian", f.dump_hessian, "print the simplified Hessian");
  dcp->add_flag("--falsify", f.falsify, "sample for a non-convexity witness when unknown");
  CLI::App* check = app.add_subcommand("check", "certify and sample the Hessian numerically");
  common(check, true);
  method(check);
  CLI::App* batch = app.add_subcommand("batch", "run a corpus file");
  common(batch, false);
  batch->add_option("file", f.file, "lines: expr ; assumptions ; dims ; wrt ; expected")->required();
  batch->add_option("--method", f.method, "hessian or dcp")->check(CLI::IsMember({"hessian", "dcp"}));
  batch->add_flag("--compare-dcp", f.compare_dcp, "also run dcp and print both summaries");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*certify) return run_certify(f, false);
    if (*check) return run_certify(f, true);
    if (*dcp) {
      f.method = "dcp";
      return run_certify(f, false);
    }
    if (*hessian) return run_hessian(f);
    return run_batch(f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
