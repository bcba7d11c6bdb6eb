#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace titan {

/// Base of every error raised by the library. `error_class()` is a stable
/// identifier (e.g. "UnknownRelation") printed by the CLI as a one-line prefix.
class Error : public std::runtime_error {
public:
    Error(std::string_view error_class, const std::string& message)
        : std::runtime_error(message), class_(error_class) {}

    const std::string& error_class() const noexcept { return class_; }

private:
    std::string class_;
};

#define TITAN_DEFINE_ERROR(Name)                                                   \
    class Name : public ::titan::Error {                                           \
    public:                                                                        \
        explicit Name(const std::string& message) : ::titan::Error(#Name, message) {} \
    }

// ontology
TITAN_DEFINE_ERROR(UnknownRelation);
TITAN_DEFINE_ERROR(NoSuchSignature);
TITAN_DEFINE_ERROR(RegistryFormatError);

// kg
TITAN_DEFINE_ERROR(MalformedBundle);
TITAN_DEFINE_ERROR(UnknownSignature);
TITAN_DEFINE_ERROR(SnapshotFormatError);
TITAN_DEFINE_ERROR(UnknownNode);

// pathlang
TITAN_DEFINE_ERROR(SyntaxError);
TITAN_DEFINE_ERROR(MalformedOperator);
TITAN_DEFINE_ERROR(TypeFlowError);
TITAN_DEFINE_ERROR(MissingStartKind);
TITAN_DEFINE_ERROR(OperatorPlacementError);

// executor
TITAN_DEFINE_ERROR(StartKindMismatch);
TITAN_DEFINE_ERROR(SelectNameUnresolved);
TITAN_DEFINE_ERROR(OperatorArity);
TITAN_DEFINE_ERROR(UnresolvedEntity);

// datagen
TITAN_DEFINE_ERROR(TemplateSchemaError);
TITAN_DEFINE_ERROR(RemoteUnavailable);

// planner
TITAN_DEFINE_ERROR(PlannerUnavailable);
TITAN_DEFINE_ERROR(UnparseablePlan);

// eval / io
TITAN_DEFINE_ERROR(RecordFormatError);
TITAN_DEFINE_ERROR(IoError);

#undef TITAN_DEFINE_ERROR

}  // namespace titan
