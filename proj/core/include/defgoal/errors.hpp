#pragma once

#include <stdexcept>
#include <string>

namespace defgoal {

// One exception type per failure class; tests catch these precisely.
struct InvalidArgument : std::runtime_error {
    explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

struct SizeMismatch : std::runtime_error {
    explicit SizeMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateFit : std::runtime_error {
    explicit DegenerateFit(const std::string& what) : std::runtime_error(what) {}
};

struct SettleTimeout : std::runtime_error {
    explicit SettleTimeout(const std::string& what) : std::runtime_error(what) {}
};

struct NumericBlowup : std::runtime_error {
    explicit NumericBlowup(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyView : std::runtime_error {
    explicit EmptyView(const std::string& what) : std::runtime_error(what) {}
};

struct DemoFailure : std::runtime_error {
    explicit DemoFailure(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetCorrupt : std::runtime_error {
    explicit DatasetCorrupt(const std::string& what) : std::runtime_error(what) {}
};

struct CheckpointCorrupt : std::runtime_error {
    explicit CheckpointCorrupt(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace defgoal
