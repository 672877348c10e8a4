#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dermo/classify.hpp"
#include "dermo/errors.hpp"

namespace dermo::classify {

using nlohmann::json;

std::string model_to_json(const CalibratedClassifier& m) {
  detail::require(m.fitted, "cannot serialize an unfitted classifier");
  json j;
  j["format"] = "dermo-svm-model/1";
  j["feature"] = m.feature;
  j["context"] = m.context;
  j["kernel"] = "histogram_intersection";
  j["normalizer"] = {{"mu", m.normalizer.mu()}, {"sigma", m.normalizer.sigma()}};
  j["svm"] = {{"C", m.svm.C},
              {"bias", m.svm.bias},
              {"dual_coef", m.svm.dual_coef},
              {"support_vectors", m.svm.support_vectors}};
  j["calibration"] = {{"A", m.calibration.A}, {"B", m.calibration.B}};
  j["training"] = {{"seed", m.seed}, {"folds", m.folds}};
  return j.dump();
}

CalibratedClassifier model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("kernel").get<std::string>() != "histogram_intersection") {
      throw ValidationError("unsupported kernel " + j.at("kernel").dump());
    }
    CalibratedClassifier m;
    m.feature = j.at("feature").get<std::string>();
    m.context = j.at("context").get<std::string>();
    m.normalizer = SigmoidNormalizer(j.at("normalizer").at("mu").get<std::vector<double>>(),
                                     j.at("normalizer").at("sigma").get<std::vector<double>>());
    const json& s = j.at("svm");
    m.svm.C = s.at("C").get<double>();
    m.svm.bias = s.at("bias").get<double>();
    m.svm.dual_coef = s.at("dual_coef").get<std::vector<double>>();
    m.svm.support_vectors = s.at("support_vectors").get<Rows>();
    if (m.svm.dual_coef.size() != m.svm.support_vectors.size()) {
      throw ValidationError("dual_coef and support_vectors differ in count");
    }
    for (const auto& sv : m.svm.support_vectors)
      if (sv.size() != m.normalizer.dims()) throw ValidationError("support vector dimension mismatch");
    m.calibration.A = j.at("calibration").at("A").get<double>();
    m.calibration.B = j.at("calibration").at("B").get<double>();
    m.seed = j.at("training").at("seed").get<std::uint64_t>();
    m.folds = j.at("training").at("folds").get<int>();
    m.fitted = true;
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  } catch (const ContractError& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const CalibratedClassifier& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << model_to_json(m) << '\n';
}

CalibratedClassifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace dermo::classify
