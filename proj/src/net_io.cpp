#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "saltrk/feature_net.hpp"

namespace saltrk {

static_assert(std::endian::native == std::endian::little, "weight blobs are little-endian float32");

NetworkSpec parse_network_spec(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  NetworkSpec spec;
  bool have_magic = false, have_input = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    if (!have_magic) {
      if (word != kNetMagic) throw ConfigError("network manifest: missing magic " + std::string(kNetMagic));
      have_magic = true;
      continue;
    }
    auto fail = [&]() {
      throw ConfigError("network manifest line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
    };
    if (word == "input") {
      if (!(ls >> spec.input.height >> spec.input.width >> spec.input.channels)) fail();
      have_input = true;
    } else if (word == "conv") {
      int kh, kw, ic, oc, stride, pad;
      if (!(ls >> kh >> kw >> ic >> oc >> stride >> pad)) fail();
      spec.layers.push_back(LayerSpec::conv(kh, kw, ic, oc, stride, pad));
    } else if (word == "relu") {
      spec.layers.push_back(LayerSpec::relu());
    } else if (word == "maxpool") {
      int window, stride;
      if (!(ls >> window >> stride)) fail();
      spec.layers.push_back(LayerSpec::max_pool(window, stride));
    } else if (word == "fc") {
      int id, od;
      if (!(ls >> id >> od)) fail();
      spec.layers.push_back(LayerSpec::fully_connected(id, od));
    } else {
      fail();
    }
  }
  if (!have_magic) throw ConfigError("network manifest: missing magic " + std::string(kNetMagic));
  if (!have_input) throw ConfigError("network manifest: missing 'input H W C' line");
  spec.output_shapes();
  return spec;
}

std::string format_network_spec(const NetworkSpec& spec) {
  std::ostringstream out;
  out << kNetMagic << "\n";
  out << "input " << spec.input.height << " " << spec.input.width << " " << spec.input.channels << "\n";
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::Convolution:
        out << "conv " << l.kernel_h << " " << l.kernel_w << " " << l.in_channels << " " << l.out_channels << " "
            << l.stride << " " << l.padding << "\n";
        break;
      case LayerKind::Relu: out << "relu\n"; break;
      case LayerKind::MaxPool: out << "maxpool " << l.window << " " << l.stride << "\n"; break;
      case LayerKind::FullyConnected: out << "fc " << l.in_dim << " " << l.out_dim << "\n"; break;
    }
  }
  return out.str();
}

WeightStore unpack_weights(const NetworkSpec& spec, std::span<const float> blob) {
  std::size_t expected = spec.parameter_count();
  if (blob.size() != expected)
    throw ConfigError("weight blob: expected " + std::to_string(expected) + ", found " + std::to_string(blob.size()));
  WeightStore store(spec.layers.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto take = [&](std::size_t n) {
      std::vector<double> v(blob.begin() + pos, blob.begin() + pos + n);
      pos += n;
      return v;
    };
    store[i].kernel = take(spec.layers[i].kernel_count());
    store[i].bias = take(spec.layers[i].bias_count());
  }
  return store;
}

std::vector<float> pack_weights(const NetworkSpec& spec, const WeightStore& weights) {
  if (weights.size() != spec.layers.size()) throw ConfigError("weight store does not match spec layer count");
  std::vector<float> blob;
  blob.reserve(spec.parameter_count());
  for (const auto& lw : weights) {
    for (double v : lw.kernel) blob.push_back(static_cast<float>(v));
    for (double v : lw.bias) blob.push_back(static_cast<float>(v));
  }
  return blob;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

LoadedNetwork load_weights(const std::filesystem::path& spec_file, const std::filesystem::path& weight_file) {
  LoadedNetwork net;
  net.spec = parse_network_spec(read_file(spec_file));

  std::string raw = read_file(weight_file);
  const std::size_t magic_len = std::strlen(kNetMagic);
  if (raw.size() < magic_len || raw.compare(0, magic_len, kNetMagic) != 0)
    throw ConfigError("weight blob " + weight_file.string() + ": missing magic " + kNetMagic);
  std::size_t payload = raw.size() - magic_len;
  if (payload % sizeof(float) != 0)
    throw ConfigError("weight blob: trailing " + std::to_string(payload % sizeof(float)) + " bytes");
  std::vector<float> floats(payload / sizeof(float));
  std::memcpy(floats.data(), raw.data() + magic_len, payload);

  net.weights = unpack_weights(net.spec, floats);
  FeatureNet validate(net.spec, net.weights);

  for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
    LayerChecksum c;
    c.index = i;
    c.kind = net.spec.layers[i].kind;
    c.float_count = net.weights[i].kernel.size() + net.weights[i].bias.size();
    for (double v : net.weights[i].kernel) c.sum += v;
    for (double v : net.weights[i].bias) c.sum += v;
    net.report.push_back(c);
  }
  return net;
}

void save_network(const NetworkSpec& spec, const WeightStore& weights, const std::filesystem::path& spec_file,
                  const std::filesystem::path& weight_file) {
  std::ofstream ms(spec_file);
  if (!ms) throw InputError("cannot write " + spec_file.string());
  ms << format_network_spec(spec);

  std::vector<float> blob = pack_weights(spec, weights);
  std::ofstream bs(weight_file, std::ios::binary);
  if (!bs) throw InputError("cannot write " + weight_file.string());
  bs.write(kNetMagic, static_cast<std::streamsize>(std::strlen(kNetMagic)));
  bs.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size() * sizeof(float)));
}

}  // namespace saltrk
