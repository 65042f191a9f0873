#pragma once

// Loader for the hand-traced evaluator fixture under tests/fixtures.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "crosstrack/eval.hpp"
#include "fixture_path.hpp"

namespace crosstrack::testing {

struct EvalFixture {
  eval::Trajectories gt;
  eval::Trajectories hyp;
};

inline EvalFixture load_eval_fixture(const std::string& name) {
  std::ifstream in(std::string(CROSSTRACK_FIXTURE_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing fixture " + name);
  EvalFixture fx;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string set;
    eval::Observation o;
    fields >> set >> o.frame >> o.id >> o.box.left >> o.box.top >> o.box.right >> o.box.bottom;
    (set == "gt" ? fx.gt : fx.hyp).push_back(o);
  }
  return fx;
}

}  // namespace crosstrack::testing
