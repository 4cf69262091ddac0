"""Configuration values for the fracspec package."""

from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="FRACSPEC_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = Field("INFO", description="Log level")

    # Gauss-Jacobi rule sizes for the fractional-integral oracle
    quad_order_initial: int = Field(
        64, description="First rule order tried by the doubling loop"
    )
    quad_order_cap: int = Field(
        1024, description="Largest rule order before giving up on agreement"
    )
    quad_doubling_tol: float = Field(
        1e-10, description="Relative agreement required between doubled rules"
    )

    # Spectral projection
    projection_extra_order: int = Field(
        10, description="Extra nodes beyond the truncation degree for projections"
    )
    integration_order: int = Field(
        64, description="Gauss-Legendre order used for plain integrals of f"
    )
    default_truncation: int = Field(64, description="Default truncation degree N")

    # Flux-constant series
    series_tol: float = Field(1e-12, description="Absolute tail tolerance")
    series_max_terms: int = Field(
        1_000_000, description="Term budget before declaring divergence"
    )

    compat_rtol: float = Field(
        1e-10, description="Relative tolerance of the Neumann compatibility test"
    )

    # Finite differences used by the verification oracle
    fd_step: float = Field(1e-3, description="Largest finite-difference step")
    fd_endpoint_fraction: float = Field(
        0.1, description="Step cap as a fraction of the distance to an endpoint"
    )
    fd_min_distance: float = Field(
        1e-4, description="Closest a finite-difference evaluation may get to 0 or 1"
    )
    rl_weak_residual_tol: float = Field(
        1e-5, description="Residual accepted when verifying RL weak solutions"
    )

    sentry_dsn: str | None = Field(
        None, description="Sentry DSN for error tracking (optional)"
    )
    sentry_environment: str = Field("production", description="Sentry environment name")
    sentry_traces_sample_rate: float = Field(
        1.0, description="Sentry traces sample rate (0.0 to 1.0)"
    )

    @model_validator(mode="after")
    def validate_numerics(self) -> "Settings":
        """
        🔍 Validate the numerical knobs.

        The first rule order must be positive and leave room to double at least
        once below the cap; every tolerance and step must be positive.

        Returns:
            Self with validated numerical configuration

        Raises:
            ValueError: If a rule order or tolerance is out of range
        """
        if self.quad_order_initial < 1 or 2 * self.quad_order_initial > self.quad_order_cap:
            msg = (
                "quad_order_initial must be positive and at most half of quad_order_cap "
                f"(got {self.quad_order_initial} with cap {self.quad_order_cap})"
            )
            raise ValueError(msg)
        positive = {
            "quad_doubling_tol": self.quad_doubling_tol,
            "series_tol": self.series_tol,
            "compat_rtol": self.compat_rtol,
            "fd_step": self.fd_step,
            "fd_endpoint_fraction": self.fd_endpoint_fraction,
            "fd_min_distance": self.fd_min_distance,
            "rl_weak_residual_tol": self.rl_weak_residual_tol,
        }
        for name, value in positive.items():
            if value <= 0:
                msg = f"{name} must be positive (got {value})"
                raise ValueError(msg)
        return self


settings = Settings()
