class ProbeError(Exception):
    """Base exception for all pprobe failures."""
    pass


class ConfigError(ProbeError):
    """Invalid run configuration or command-line usage."""
    pass


class FieldError(ProbeError):
    """Invalid field construction, grid or sampling request."""
    pass


class GeometryError(ProbeError):
    """Invalid geometric object or query (origin input, bad level, ...)."""
    pass


class FluxError(ProbeError):
    """Surface flux or bound check cannot be evaluated."""
    pass


class PressureError(ProbeError):
    """Pressure recovery failed or was requested outside its domain."""
    pass


class SemigroupError(ProbeError):
    """Heat semigroup or Duhamel operator misuse."""
    pass


class SimulationError(ProbeError):
    """Simulator step failed (CFL violation, non-finite state)."""
    pass


class CampaignError(ProbeError):
    """Custom exception for campaign orchestration failures."""
    pass
