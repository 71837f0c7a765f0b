// Line-delimited JSON child used by the external-oracle tests: reads
// {"x":[...]} requests from stdin and answers one JSON object per line.
// Flags select well-behaved and misbehaving variants.

#include <cmath>
#include <cstring>
#include <iostream>
#include <string>

#include "json.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  enum class Mode { interval, constant_one, garbage, out_of_range, probs };
  Mode mode = Mode::interval;
  long exit_after = -1;
  bool silent = false;

  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--constant-one") mode = Mode::constant_one;
    if (arg == "--garbage") mode = Mode::garbage;
    if (arg == "--out-of-range") mode = Mode::out_of_range;
    if (arg == "--probs") mode = Mode::probs;
    if (arg == "--silent") silent = true;
    if (arg == "--exit-after" && i + 1 < argc) exit_after = std::atol(argv[++i]);
  }

  std::string line;
  long answered = 0;
  while (std::getline(std::cin, line)) {
    if (exit_after >= 0 && answered >= exit_after) return 0;
    if (silent) continue;

    json request;
    try {
      request = json::parse(line);
    } catch (...) {
      std::cout << "{\"error\":\"bad request\"}" << std::endl;
      continue;
    }
    const std::vector<double> x =
        request.at("x").get<std::vector<double>>();

    switch (mode) {
      case Mode::interval:
        std::cout << json{{"e", std::abs(x.at(0)) < 0.5 ? 1 : 0}}.dump()
                  << std::endl;
        break;
      case Mode::constant_one:
        std::cout << "{\"e\":1}" << std::endl;
        break;
      case Mode::garbage:
        std::cout << "this is not json" << std::endl;
        break;
      case Mode::out_of_range:
        std::cout << "{\"e\":2}" << std::endl;
        break;
      case Mode::probs: {
        const double p = 1.0 / (1.0 + std::exp(-x.at(0)));
        std::cout << json{{"probs", std::vector<double>{p, 1.0 - p}}}.dump()
                  << std::endl;
        break;
      }
    }
    ++answered;
  }
  return 0;
}
