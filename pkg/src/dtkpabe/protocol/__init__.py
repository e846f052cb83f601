"""Four-role protocol (RU, CA, CD, AO) and its discrete-event simulator."""
from .messages import FinishedCiphertext, PreDecryptedCiphertext, SemiCiphertext
from .roles import (AgencyOperator, CentralAggregator, CentralDispatcher, ProtocolError,
                    ResidentialUnit, TrustedAuthority, ao_decrypt, blind_message,
                    ca_finalize_batch, ca_finalize_delayed, cd_predecrypt, recover_blinding,
                    ru_encrypt)
from .scenario import load_scenario, parse_scenario, run_scenario_file
from .simulator import AODefinition, Arrival, Delivery, TransactionConfig, Transcript, run_scenario

__all__ = [
    "AODefinition", "AgencyOperator", "Arrival", "CentralAggregator", "CentralDispatcher",
    "Delivery", "FinishedCiphertext", "PreDecryptedCiphertext", "ProtocolError",
    "ResidentialUnit", "SemiCiphertext", "TransactionConfig", "Transcript", "TrustedAuthority",
    "ao_decrypt", "blind_message", "ca_finalize_batch", "ca_finalize_delayed", "cd_predecrypt",
    "load_scenario", "parse_scenario", "recover_blinding", "ru_encrypt", "run_scenario",
    "run_scenario_file",
]
