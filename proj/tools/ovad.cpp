// SPDX-License-Identifier: Apache-2.0
#include "ovad/cli.hpp"

int main(int argc, char** argv) { return ovad::cli::run(argc, argv); }
