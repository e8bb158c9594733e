#pragma once

#include <string>

#include "modmon/dcsbm.hpp"
#include "modmon/dmon.hpp"
#include "modmon/errors.hpp"

namespace modmon {

inline std::string change_name(ChangeType change) {
    switch (change) {
        case ChangeType::None: return "none";
        case ChangeType::Split: return "split";
        case ChangeType::Merge: return "merge";
        case ChangeType::NewCommunity: return "new_community";
        case ChangeType::AttributeDrift: return "attribute_drift";
        case ChangeType::StructuralShift: return "structural_shift";
    }
    throw InvalidArgumentError("unknown change type");
}

inline ChangeType parse_change(const std::string& name) {
    if (name == "none") return ChangeType::None;
    if (name == "split") return ChangeType::Split;
    if (name == "merge") return ChangeType::Merge;
    if (name == "new_community") return ChangeType::NewCommunity;
    if (name == "attribute_drift") return ChangeType::AttributeDrift;
    if (name == "structural_shift") return ChangeType::StructuralShift;
    throw InvalidArgumentError("unknown change type: " + name);
}

inline std::string regularizer_name(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::Srco: return "srco";
        case RegularizerKind::Cr: return "cr";
        case RegularizerKind::None: return "none";
    }
    throw InvalidArgumentError("unknown regularizer");
}

inline RegularizerKind parse_regularizer(const std::string& name) {
    if (name == "srco") return RegularizerKind::Srco;
    if (name == "cr") return RegularizerKind::Cr;
    if (name == "none") return RegularizerKind::None;
    throw InvalidArgumentError("unknown regularizer: " + name);
}

inline std::string density_name(DensityInterpretation density) {
    switch (density) {
        case DensityInterpretation::PerNodeDegree: return "per_node_degree";
        case DensityInterpretation::Literal: return "literal";
    }
    throw InvalidArgumentError("unknown density interpretation");
}

inline DensityInterpretation parse_density(const std::string& name) {
    if (name == "per_node_degree") return DensityInterpretation::PerNodeDegree;
    if (name == "literal") return DensityInterpretation::Literal;
    throw InvalidArgumentError("unknown density interpretation: " + name);
}

}  // namespace modmon
