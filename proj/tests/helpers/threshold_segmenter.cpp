// Reference external segmenter: reads one request on stdin and answers with
// (image > 0.5) as float32 probabilities. With argument "short" it answers
// with one value too few; with "fail" it exits nonzero.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "";
  std::string line;
  if (!std::getline(std::cin, line)) return 2;
  const auto head = nlohmann::json::parse(line);
  std::size_t n = 1;
  for (int v : head.at("shape")) n *= static_cast<std::size_t>(v);
  const std::size_t channels = head.at("channels").get<std::size_t>();
  std::vector<float> data(n * channels);
  std::cin.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
  if (static_cast<std::size_t>(std::cin.gcount()) != data.size() * 4) return 3;
  if (mode == "fail") return 1;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = data[i] > 0.5f ? 1.0f : 0.0f;
  const std::size_t emit = mode == "short" ? n - 1 : n;
  std::fwrite(out.data(), 4, emit, stdout);
  return 0;
}
