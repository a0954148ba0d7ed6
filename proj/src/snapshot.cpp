#include "bdd/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sodium.h>

#include "bdd/errors.hpp"

namespace bdd {

namespace {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "snapshot encoding assumes a little-endian host");

std::string pack(const double *data, std::size_t count) {
  std::string bytes(count * sizeof(double), '\0');
  if (count > 0)
    std::memcpy(bytes.data(), data, bytes.size());
  return base64_encode(bytes);
}

std::vector<double> unpack(const json &field, std::size_t expected) {
  const std::string bytes = base64_decode(field.get<std::string>());
  if (bytes.size() != expected * sizeof(double))
    throw InvalidArgument("snapshot array has the wrong length");
  std::vector<double> out(expected);
  if (expected > 0)
    std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

std::string pack_real(const RVector &v) {
  return pack(v.data(), static_cast<std::size_t>(v.size()));
}

std::string pack_matrix(const RMatrix &m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return pack(rm.data(), static_cast<std::size_t>(rm.size()));
}

std::string pack_complex(const CVector &v) {
  return pack(reinterpret_cast<const double *>(v.data()),
              2 * static_cast<std::size_t>(v.size()));
}

RVector unpack_real(const json &f, int len) {
  const auto raw = unpack(f, static_cast<std::size_t>(len));
  return Eigen::Map<const RVector>(raw.data(), len);
}

RMatrix unpack_matrix(const json &f, int rows, int cols) {
  const auto raw = unpack(f, static_cast<std::size_t>(rows) * cols);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(raw.data(), rows, cols);
}

CVector unpack_complex(const json &f, int len) {
  const auto raw = unpack(f, 2 * static_cast<std::size_t>(len));
  CVector v(len);
  for (int i = 0; i < len; ++i)
    v[i] = cplx(raw[2 * i], raw[2 * i + 1]);
  return v;
}

} // namespace

std::string base64_encode(const std::string &bytes) {
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(),
                    reinterpret_cast<const unsigned char *>(bytes.data()),
                    bytes.size(), variant);
  out.pop_back(); // terminating NUL
  return out;
}

std::string base64_decode(const std::string &text) {
  std::string out(text.size() / 4 * 3 + 3, '\0');
  std::size_t len = 0;
  const char *end = nullptr;
  if (sodium_base642bin(reinterpret_cast<unsigned char *>(out.data()), out.size(),
                        text.data(), text.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size())
    throw InvalidArgument("invalid base64 text");
  out.resize(len);
  return out;
}

std::string snapshot_to_json(const TrialSpec &spec, const Instance &inst) {
  const Dimensions &d = inst.ensemble.dims();
  json doc;
  doc["format"] = "bdd-instance";
  doc["version"] = 1;
  doc["encoding"] = "base64-f64le";
  doc["dims"] = {{"L", d.L}, {"Q", d.Q}, {"M", d.M}, {"K", d.K}, {"N", d.N}};
  doc["seed"] = std::to_string(spec.seed);
  doc["snr_db"] = spec.snr_db ? json(*spec.snr_db) : json(nullptr);
  doc["target_d"] = spec.component_targets();
  doc["real_valued"] = spec.real_valued;
  json comps = json::array();
  for (int n = 0; n < d.N; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    comps.push_back({{"modulation", pack_real(inst.ensemble.modulation(n))},
                     {"coding", pack_matrix(inst.ensemble.coding(n))},
                     {"channel", pack_complex(inst.truth.channels[idx])},
                     {"coefficients", pack_complex(inst.truth.coefficients[idx])}});
  }
  doc["components"] = std::move(comps);
  doc["observation"] = pack_complex(inst.observation.samples);
  doc["noise"] = inst.observation.noise ? json(pack_complex(*inst.observation.noise))
                                        : json(nullptr);
  return doc.dump(2);
}

Snapshot snapshot_from_json(const std::string &text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw InvalidArgument(std::string("snapshot is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != "bdd-instance" || doc.at("version") != 1 ||
        doc.at("encoding") != "base64-f64le")
      throw InvalidArgument("unsupported snapshot format");
    const json &dj = doc.at("dims");
    Dimensions d{dj.at("L").get<int>(), dj.at("Q").get<int>(), dj.at("M").get<int>(),
                 dj.at("K").get<int>(), dj.at("N").get<int>()};
    d.validate();

    TrialSpec spec;
    spec.dims = d;
    spec.seed = std::stoull(doc.at("seed").get<std::string>());
    if (!doc.at("snr_db").is_null())
      spec.snr_db = doc.at("snr_db").get<double>();
    spec.target_d = doc.at("target_d").get<std::vector<double>>();
    spec.real_valued = doc.at("real_valued").get<bool>();

    const json &comps = doc.at("components");
    if (!comps.is_array() || comps.size() != static_cast<std::size_t>(d.N))
      throw InvalidArgument("snapshot needs one entry per component");
    std::vector<RVector> modulation;
    std::vector<RMatrix> coding;
    BlockFactorPair truth;
    for (const json &c : comps) {
      modulation.push_back(unpack_real(c.at("modulation"), d.Q));
      coding.push_back(unpack_matrix(c.at("coding"), d.Q, d.K));
      truth.channels.push_back(unpack_complex(c.at("channel"), d.M));
      truth.coefficients.push_back(unpack_complex(c.at("coefficients"), d.K));
    }
    ObservationVector obs;
    obs.samples = unpack_complex(doc.at("observation"), d.L);
    if (!doc.at("noise").is_null())
      obs.noise = unpack_complex(doc.at("noise"), d.L);
    MeasurementEnsemble ens(d, std::move(modulation), std::move(coding));
    return Snapshot{spec, Instance{std::move(ens), std::move(truth), std::move(obs)}};
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("malformed snapshot: ") + e.what());
  } catch (const std::logic_error &e) {
    if (dynamic_cast<const InvalidArgument *>(&e))
      throw;
    throw InvalidArgument(std::string("malformed snapshot: ") + e.what());
  }
}

void save_snapshot(const std::filesystem::path &path, const TrialSpec &spec,
                   const Instance &inst) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open snapshot for writing: " + path.string());
  out << snapshot_to_json(spec, inst) << '\n';
  if (!out)
    throw IoError("failed writing snapshot: " + path.string());
}

Snapshot load_snapshot(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open snapshot: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return snapshot_from_json(buf.str());
}

} // namespace bdd
