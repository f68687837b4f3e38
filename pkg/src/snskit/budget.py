"""Failure-probability ledger shared by every estimation stage."""

from __future__ import annotations

from dataclasses import dataclass, fields

__all__ = ["SecurityBudget", "security_budget"]


@dataclass(frozen=True)
class SecurityBudget:
    """Per-use failure probabilities and their composition into totals.

    xi_default      Chernoff failure probability of every ordinary use
    xi_e1           failure probability of the phase-error numerator uses
                    and of the pre-pairing error-count bound
    eps_def         target trace-distance bound of the near-i.i.d. reduction
    xi_tau          tail level fixed when inverting for the per-pair error
    xi_tau_tilde    tail level fixed when inverting for the survived count
    eps_cor         failure probability of error correction
    eps_PA          failure probability of privacy amplification
    eps_hat         smooth-entropy chain-rule coefficient
    eps_n1_prime    failure probability of the survived-untagged count
                    (six Chernoff uses at xi_default)
    eps_nk          failure probability of the pair/neglected-count pair
                    (two Chernoff uses at xi_default)

    Derived quantities (eps_e, eps_s, eps_sec, eps_tol) are exact arithmetic
    over the fields; use :func:`security_budget` to build an instance whose
    multi-use totals track an overridden xi_default.
    """

    xi_default: float = 1e-10
    xi_e1: float = 1e-13
    eps_def: float = 1e-13
    xi_tau: float = 1e-2
    xi_tau_tilde: float = 1e-10
    eps_cor: float = 1e-10
    eps_PA: float = 1e-10
    eps_hat: float = 1e-10
    eps_n1_prime: float = 6e-10
    eps_nk: float = 2e-10

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.startswith("xi"):
                if not (0.0 < v <= 1.0):
                    raise ValueError(f"{f.name} must lie in (0, 1], got {v}")
            elif not (0.0 <= v < 1.0):
                raise ValueError(f"{f.name} must lie in [0, 1), got {v}")

    @property
    def eps_e(self) -> float:
        """Failure probability of the pre-pairing error-count bound (3 uses)."""
        return 3.0 * self.xi_e1

    @property
    def eps_s(self) -> float:
        """Failure probability of the post-pairing phase-error bound."""
        head = self.eps_e + 2.0 * self.eps_def
        tail_part = head / self.xi_tau if head > 0.0 else 0.0
        return self.xi_tau_tilde + tail_part + 2.0 * self.eps_def

    @property
    def eps_sec(self) -> float:
        return (
            2.0 * self.eps_hat
            + 4.0 * self.eps_s
            + self.eps_PA
            + self.eps_n1_prime
            + self.eps_nk
        )

    @property
    def eps_tol(self) -> float:
        """Total composable failure probability of the produced key."""
        return self.eps_cor + self.eps_sec


def security_budget(**overrides: float) -> SecurityBudget:
    """Build a budget from defaults plus overrides.

    The multi-use totals eps_n1_prime and eps_nk follow an overridden
    xi_default (6 and 2 uses respectively) unless set explicitly.
    """
    known = {f.name for f in fields(SecurityBudget)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown budget fields: {sorted(unknown)}")
    values = dict(overrides)
    if "xi_default" in values and values["xi_default"] < 1.0:
        # xi >= 1 is the fluctuation-free diagnostic switch; its multi-use
        # totals are meaningless, so only real budgets track the override.
        values.setdefault("eps_n1_prime", 6.0 * values["xi_default"])
        values.setdefault("eps_nk", 2.0 * values["xi_default"])
    return SecurityBudget(**values)
