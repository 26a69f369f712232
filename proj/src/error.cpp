#include "evcosim/error.hpp"

namespace evcosim {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::BadFile: return "BadFile";
        case Errc::BadArguments: return "BadArguments";
        case Errc::ValidationFailed: return "ValidationFailed";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::UnknownBus: return "UnknownBus";
        case Errc::UnknownStation: return "UnknownStation";
        case Errc::UnknownUser: return "UnknownUser";
        case Errc::UnknownVehicle: return "UnknownVehicle";
        case Errc::VehicleAlreadyConnected: return "VehicleAlreadyConnected";
        case Errc::NoVehicleConnected: return "NoVehicleConnected";
        case Errc::NotCharging: return "NotCharging";
        case Errc::InfeasibleDemand: return "InfeasibleDemand";
        case Errc::Diverged: return "Diverged";
        case Errc::IslandWithoutSlack: return "IslandWithoutSlack";
        case Errc::BudgetExceeded: return "BudgetExceeded";
        case Errc::EmptyInput: return "EmptyInput";
        case Errc::UnstableIntegration: return "UnstableIntegration";
    }
    return "Error";
}

} // namespace evcosim
