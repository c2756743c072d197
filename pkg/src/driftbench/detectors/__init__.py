from .base import Detector
from .eddm import EDDM, eddm_update
from .iks import IKS
from .ks import ks_critical, ks_statistic
from .pinage import PinageDD
from .reference import NullDetector, OracleDetector
from .sand import SAND, bdcp_gains, bdcp_scan
from .studd import STUDD

__all__ = [
    "Detector", "EDDM", "eddm_update", "IKS", "ks_critical", "ks_statistic", "PinageDD",
    "NullDetector", "OracleDetector", "SAND", "bdcp_gains", "bdcp_scan", "STUDD",
]
