# Copyright 2026 The deidbench Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Reference probabilities for the Bayes sign test fixtures.

Draws 10^6 Dirichlet(prior + counts) samples with numpy's PCG64 generator
and reports how often each of (lose, rope, win) is the largest component.
Writes tests/bayes_fixtures.h.
"""

import numpy as np

ROPE = (-1.0, 1.0)
N = 1_000_000


def vectors():
    rng = np.random.default_rng(20261016)
    out = [
        [-3, -2, 0, 2, 3, -3, -2, 0, 2, 3],
        [5.0] * 20,
        [0.0] * 20,
        [-1.0, 1.0, -1.0, 1.0, 0.5],
        [-10.0] * 8 + [0.0] * 4,
        [2.0, 3.0, 4.0, -5.0, 0.0, 0.2],
    ]
    while len(out) < 25:
        n = int(rng.integers(4, 31))
        mode = len(out) % 4
        if mode == 0:
            v = rng.normal(0.0, 2.0, n)
        elif mode == 1:
            v = rng.normal(-1.5, 1.5, n)
        elif mode == 2:
            v = rng.normal(1.2, 1.0, n)
        else:
            v = rng.choice([-2.0, -1.0, 0.0, 1.0, 2.0], n)
        out.append([round(float(x), 3) for x in v])
    return out


def oracle(diffs, seed):
    d = np.asarray(diffs)
    counts = np.array([(d < ROPE[0]).sum(), ((d >= ROPE[0]) & (d <= ROPE[1])).sum(),
                       (d > ROPE[1]).sum()], dtype=float)
    rng = np.random.default_rng(seed)
    draws = rng.dirichlet(counts + 1.0, N)
    hits = np.bincount(draws.argmax(axis=1), minlength=3)
    return hits / N


def main():
    lines = [
        "// Copyright 2026 The deidbench Authors",
        "//",
        "// Licensed under the Apache License, Version 2.0 (the \"License\");",
        "// you may not use this file except in compliance with the License.",
        "// You may obtain a copy of the License at",
        "//",
        "//     https://www.apache.org/licenses/LICENSE-2.0",
        "//",
        "// Unless required by applicable law or agreed to in writing, software",
        "// distributed under the License is distributed on an \"AS IS\" BASIS,",
        "// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.",
        "// See the License for the specific language governing permissions and",
        "// limitations under the License.",
        "",
        "// Generated by tests/oracles/bayes_oracle.py; do not edit.",
        "#ifndef DEID_TESTS_BAYES_FIXTURES_H_",
        "#define DEID_TESTS_BAYES_FIXTURES_H_",
        "",
        "#include <array>",
        "#include <vector>",
        "",
        "struct BayesFixture {",
        "  std::vector<double> diffs;",
        "  std::array<double, 3> expected;  // lose, rope, win",
        "};",
        "",
        "inline const std::vector<BayesFixture>& bayes_fixtures() {",
        "  static const std::vector<BayesFixture> kFixtures = {",
    ]
    for i, v in enumerate(vectors()):
        p = oracle(v, 1000 + i)
        vals = ", ".join(repr(float(x)) for x in v)
        lines.append(f"      {{{{{vals}}},")
        lines.append(f"       {{{float(p[0])!r}, {float(p[1])!r}, {float(p[2])!r}}}}},")
    lines += ["  };", "  return kFixtures;", "}", "", "#endif  // DEID_TESTS_BAYES_FIXTURES_H_", ""]
    with open("tests/bayes_fixtures.h", "w") as f:
        f.write("\n".join(lines))


if __name__ == "__main__":
    main()
