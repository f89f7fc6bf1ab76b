try:
    from pydantic_settings import BaseSettings
except ImportError:
    from pydantic import BaseSettings
from dotenv import load_dotenv
load_dotenv()

class Settings(BaseSettings): # type: ignore
    PROJECT_NAME: str = "superres"

    # measures
    MERGE_TOL: float = 1e-10
    COEFF_BOUND_SLACK: float = 1e-12

    # toeplitz
    EIG_REL_TOL: float = 1e-9
    ZERO_ABS_TOL: float = 1e-14
    ROOT_TOL: float = 1e-6
    EIG_RESIDUAL_TOL: float = 1e-10
    DECOMPOSITION_RESIDUAL_TOL: float = 1e-8

    # certificates
    CERT_GRID_MIN: int = 4096
    CERT_GRID_FACTOR: int = 64
    CERT_SUP_TOL: float = 1e-7
    CERT_SAT_TOL: float = 1e-7
    CERT_FEAS_TOL: float = 1e-8
    NONCONSTANT_TOL: float = 1e-12
    INTERP_RCOND: float = 1e-12

    # bpc
    GRID_FACTOR: int = 512
    RECOVERY_GRID_FACTOR: int = 32
    LP_TOL: float = 1e-9
    LP_MAX_ITER: int = 50000
    RECOVERY_ADMM_TOL: float = 1e-6
    RECOVERY_ADMM_RES_TOL: float = 1e-4
    RECOVERY_MAX_ROUNDS: int = 20
    RECOVERY_DROP_TOL: float = 1e-9
    RECOVERY_FEAS_TOL: float = 1e-8
    RECOVERY_SLIDE_MAX_ITER: int = 500
    RECOVERY_SLIDE_FEAS_TOL: float = 1e-6
    CLUSTER_MASS_FRACTION: float = 1e-3

    # grid_spline
    SPLINE_ABS_TOL: float = 1e-9
    SPLINE_REL_TOL: float = 1e-7
    SPLINE_GAP_TOL: float = 1e-9
    SPLINE_MAX_ITER: int = 200000
    SPLINE_RHO: float = 1.0
    QUADRATURE_FACTOR: int = 64
    QUADRATURE_TOL: float = 1e-6
    EVAL_POINTS: int = 4096

    # Runtime
    SEED: int = 0  # BPC_SEED
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False
    BENCH_WORKERS: int = 1

    class Config:
        env_file = ".env"
        env_prefix = "BPC_"
        extra = "allow"

settings = Settings()
