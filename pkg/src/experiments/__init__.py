"""Named experiments of the command line, each returning an ExperimentReport."""

from src.experiments.correlation_length import run_correlation_length
from src.experiments.crossing import run_crossing
from src.experiments.kappa import run_kappa
from src.experiments.scaling import run_scaling_comparison
from src.experiments.susceptibility import run_susceptibility
from src.experiments.universal_cover import run_universal_cover
from src.experiments.verify import run_verify_identities

EXPERIMENTS = {
    "verify": run_verify_identities,
    "crossing": run_crossing,
    "xi": run_correlation_length,
    "chi": run_susceptibility,
    "cover": run_universal_cover,
    "kappa": run_kappa,
    "scaling": run_scaling_comparison,
}
