// SPDX-License-Identifier: Apache-2.0
#pragma once

// The `ovad` command line: gen-data, gen-textbank, gen-teacher, train, eval,
// predict, gradcheck, dump-embeddings.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or data error.
// Machine-readable JSON goes to `out`, human-readable tables to `err`.

#include <iosfwd>
#include <string>
#include <vector>

namespace ovad::cli {

int run(int argc, const char* const* argv);

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ovad::cli
