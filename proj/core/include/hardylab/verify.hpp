#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hardylab {

struct VerifyCheck {
  std::string id;  // module/op: property
  bool passed = false;
  std::string detail;
};

struct VerifyResult {
  std::vector<VerifyCheck> checks;
  bool ok() const;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int threads = 0;
};

// Property suites on tiny instances: brute-force oracles, scaling laws,
// partitions, determinism and a miniature coherence sweep.
VerifyResult run_verify(const VerifyOptions& options = {});

}  // namespace hardylab
