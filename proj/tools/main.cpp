// Copyright Contributors to the prnukit project.
// SPDX-License-Identifier: Apache-2.0

#include "prnu_cli.hpp"

int main(int argc, char** argv) {
    return prnu::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
