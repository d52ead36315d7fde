"""Shielded multi-asset pool: accounts, stealth notes, a Poseidon note tree,
transaction statements with a pluggable proof backend, the pool state
machine, threshold de-anonymization and a simulated chain with a CLI."""

from .account import (
    AddressRegistry, ShieldedAccount, ShieldedAddress, derive_account, new_account,
    shielded_address,
)
from .compliance import (
    ComplianceEnvelope, GuardianSet, PartialDecryption, RequestLog, RevocationRequest,
    combine_partials, encrypt_for_compliance, guardian_approve, guardian_keygen,
    log_verify, revoker_decrypt, revoker_request,
)
from .errors import PoolError
from .ledger import (
    MerkleTree, Note, NoteLedger, RootHistory, commitment, nullifier, verify_opening,
)
from .pool import ConvertRequest, Pool, PoolConfig, TransactionPayload, UserOperation
from .proving import Proof, SetupKeys, forge_proof, prove, setup_ceremony, verify
from .proxies import MockStake, MockSwap
from .sim import BundlerQueue, Chain, Client, LedgerEvent
from .stealth import AuxData, StealthOutput, create_stealth_output, ownership_witness, scan
from .transaction import (
    Intent, Payment, PrivateInputs, PublicInputs, build_transaction, check_statement,
    sign_inputs,
)
from .wallet import Wallet

__version__ = "0.1.0"
