#include "sinbad/descriptor_model.hpp"

#include "sinbad/element_set.hpp"
#include "sinbad/error.hpp"
#include "sinbad/io.hpp"

#include <json.hpp>

#include <vector>

namespace sinbad {

using nlohmann::json;

SetDescriptor DescriptorModel::describe(const ElementMatrix& elements) const {
    return histogram_descriptor(project_elements(elements, basis), spec);
}

FittedDescriptors fit_descriptor_model(std::span<const ElementMatrix> training,
                                       const DescriptorParams& params) {
    if (training.empty()) {
        throw DataError("descriptor model needs at least one training set");
    }
    const Eigen::Index n_dims = training.front().cols();
    for (const auto& elements : training) {
        if (elements.cols() != n_dims) {
            throw DataError("inconsistent element dimension in training sets: " +
                            std::to_string(elements.cols()) + " vs " + std::to_string(n_dims));
        }
    }

    FittedDescriptors fitted;
    auto& model = fitted.model;
    model.basis = sample_projection(n_dims, params.projections, params.mode, params.seed, training);

    std::vector<Eigen::MatrixXd> projected;
    projected.reserve(training.size());
    for (const auto& elements : training) {
        projected.push_back(project_elements(elements, model.basis));
    }

    if (params.edge_mode == EdgeMode::equal_width) {
        RangeAccumulator range(model.basis.n_proj());
        for (const auto& p : projected) range.add(p);
        model.spec = range.finish(params.bins, params.cumulative);
    } else {
        Eigen::Index rows = 0;
        for (const auto& p : projected) rows += p.rows();
        Eigen::MatrixXd pooled(rows, model.basis.n_proj());
        Eigen::Index offset = 0;
        for (const auto& p : projected) {
            pooled.middleRows(offset, p.rows()) = p;
            offset += p.rows();
        }
        model.spec = fit_bin_edges(pooled, params.bins, EdgeMode::quantile, params.cumulative);
    }

    fitted.training.resize(Eigen::Index(training.size()), model.descriptor_size());
    for (std::size_t i = 0; i < projected.size(); ++i) {
        fitted.training.row(Eigen::Index(i)) = histogram_descriptor(projected[i], model.spec).values;
    }
    return fitted;
}

void save_descriptor_model(const DescriptorModel& model, const std::filesystem::path& dir,
                           const std::string& stem) {
    ElementSet basis;
    basis.elements = model.basis.matrix.cast<float>();
    write_element_set(basis, dir / (stem + ".basis.sinb"));

    json doc;
    doc["format_version"] = 1;
    doc["mode"] = to_string(model.basis.mode);
    doc["seed"] = model.basis.seed;
    doc["bins"] = model.spec.bins;
    doc["cumulative"] = model.spec.cumulative;
    doc["edge_mode"] = to_string(model.spec.edge_mode);
    doc["edges"] = model.spec.edges;
    doc["degenerate"] = model.spec.degenerate;
    atomic_write_text(dir / (stem + ".basis.json"), doc.dump() + "\n");
}

DescriptorModel load_descriptor_model(const std::filesystem::path& dir, const std::string& stem) {
    const auto sidecar = dir / (stem + ".basis.json");
    const auto container = dir / (stem + ".basis.sinb");
    if (!std::filesystem::exists(sidecar) || !std::filesystem::exists(container)) {
        throw DataError("missing descriptor model files for '" + stem + "' in " + dir.string());
    }
    DescriptorModel model;
    try {
        const auto doc = json::parse(read_text_file(sidecar));
        model.basis.mode = parse_projection_mode(doc.at("mode").get<std::string>());
        model.basis.seed = doc.at("seed").get<std::uint64_t>();
        model.spec.bins = doc.at("bins").get<Eigen::Index>();
        model.spec.cumulative = doc.at("cumulative").get<bool>();
        model.spec.edge_mode = parse_edge_mode(doc.at("edge_mode").get<std::string>());
        model.spec.edges = doc.at("edges").get<std::vector<std::vector<double>>>();
        model.spec.degenerate = doc.at("degenerate").get<std::vector<std::uint8_t>>();
    } catch (const json::exception& e) {
        throw DataError("malformed descriptor sidecar " + sidecar.string() + ": " + e.what());
    }
    model.basis.matrix = read_element_set(container).elements.cast<double>();
    if (model.basis.n_proj() != model.spec.n_proj() ||
        model.spec.degenerate.size() != model.spec.edges.size()) {
        throw DataError("descriptor sidecar does not match basis in " + dir.string());
    }
    return model;
}

}  // namespace sinbad
