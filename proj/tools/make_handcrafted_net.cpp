// Writes the built-in colour detector network as a manifest + weight blob pair.
#include <iostream>

#include "saltrk/feature_net.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_handcrafted_net SPEC_OUT WEIGHTS_OUT\n";
    return 2;
  }
  const auto net = saltrk::make_handcrafted_network();
  saltrk::save_network(net.spec, net.weights, argv[1], argv[2]);
  return 0;
}
