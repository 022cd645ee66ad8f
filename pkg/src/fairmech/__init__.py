"""Exact mechanisms and auditors for fair division of goods and cake."""
from __future__ import annotations

from .audits import AuditReport, Criterion, Dominance, DominanceMode, dominates, is_ef1, is_efficient, is_envy_free, is_fpo, is_fulfilling, pdp_holds
from .characterization import characterization_search
from .core import Allocation, CapExceeded, InvalidInstance, OrdinalReport, ValuationProfile, parse_instance, preference_order, serialize_instance, utility
from .interim import bic_audit_exact, check_monotone, dsic_audit_grid, interim_allocation, positional_interim
from .mechanisms import MechanismId, WelfareFn, pass_least_favorite, rr_pass, serial_dictatorship, welfare_max, welfare_value
from .priors import PriorSpec, bic_audit_mc, neutrality_test, sample_valuation

__version__ = "0.1.0"
