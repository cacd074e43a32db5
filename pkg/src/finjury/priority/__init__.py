from .candidates import CandidateFamily, cantor_pair
from .sads import SadsRun, run_sads, verify_sads
from .sdnr import SdnrRun, run_sdnr, verify_sdnr
from .sts import StsRun, run_sts, verify_sts

__all__ = ["CandidateFamily", "SadsRun", "SdnrRun", "StsRun", "cantor_pair", "run_sads", "run_sdnr",
           "run_sts", "verify_sads", "verify_sdnr", "verify_sts"]
