#pragma once

#include <stdexcept>
#include <string>

namespace evcosim {

enum class Errc {
    BadFile,
    BadArguments,
    ValidationFailed,
    DuplicateId,
    UnknownBus,
    UnknownStation,
    UnknownUser,
    UnknownVehicle,
    VehicleAlreadyConnected,
    NoVehicleConnected,
    NotCharging,
    InfeasibleDemand,
    Diverged,
    IslandWithoutSlack,
    BudgetExceeded,
    EmptyInput,
    UnstableIntegration,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace evcosim
