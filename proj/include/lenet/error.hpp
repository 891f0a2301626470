#ifndef LENET_ERROR_HPP
#define LENET_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace lenet {

enum class ErrorKind {
    InvalidShape,
    InvalidState,
    InvalidLabel,
    InvalidConfig,
    InvalidPartition,
    EmptyDataset,
    DivergenceDetected,
    CorruptCheckpoint,
    UnsupportedVersion,
    DatasetNotFound,
    ImageDecodeError,
    IoError,
    MalformedInput,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidShape: return "InvalidShape";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidPartition: return "InvalidPartition";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DivergenceDetected: return "DivergenceDetected";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::DatasetNotFound: return "DatasetNotFound";
    case ErrorKind::ImageDecodeError: return "ImageDecodeError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::MalformedInput: return "MalformedInput";
    }
    return "Unknown";
}

/// Every failure raised by the engine carries one of the kinds above so the
/// CLI can map it onto an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace lenet

#endif
