#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "condmall/error.hpp"
#include "condmall/parallel.hpp"
#include "condmall/suites.hpp"

using namespace condmall;

namespace {

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<SuiteReport()> run;
};

}  // namespace

int main() {
  const unsigned workers = default_workers();
  const std::vector<Criterion> criteria = {
      {1, "operator identities", 30.0, [] { return operator_suite({}); }},
      {2, "chaos decomposition", 60.0, [] { return chaos_suite({}); }},
      {3, "Glauber / Mehler", 120.0,
       [&] {
         GlauberSuiteOptions o;
         o.workers = workers;
         return glauber_suite(o);
       }},
      {4, "concentration", 60.0, [] { return concentration_suite({}); }},
      {5, "conditional Bernoulli CLT", 300.0,
       [&] {
         CltBernoulliSuiteOptions o;
         o.workers = workers;
         return clt_bernoulli_suite(o);
       }},
      {6, "Wasserstein bound dominance", 120.0, [] { return wasserstein_suite({}); }},
      {7, "fourth-moment inequalities", 120.0,
       [&] {
         FourthMomentSuiteOptions o;
         o.workers = workers;
         return fourth_moment_suite(o);
       }},
      {8, "hypergraph motifs", 600.0,
       [&] {
         HypergraphSuiteOptions o;
         o.workers = workers;
         return hypergraph_suite(o);
       }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    SuiteReport r;
    std::string error;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      error = e.what();
      r.pass = false;
    }
    const bool in_time = r.seconds < c.limit_seconds;
    const bool pass = r.pass && error.empty() && in_time;
    failures += !pass;
    std::printf("%s criterion %d: %s (%.2f s, limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, r.seconds,
                c.limit_seconds);
    std::fputs(r.summary().c_str(), stdout);
    if (!error.empty()) std::printf("  error: %s\n", error.c_str());
    if (!in_time) std::printf("  runtime limit exceeded\n");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
