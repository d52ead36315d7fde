"""Command-line wallet over the simulated chain.

State lives in three kinds of file: the pool config (JSON), the append-only
ledger (JSON lines) and per-user key files. Every command prints one JSON
object on stdout; failures print ``{"error": category, ...}`` and exit
with the category's code.
"""

import argparse
import contextlib
import fcntl
import json
import sys
from pathlib import Path

from .account import ShieldedAccount, ShieldedAddress, new_account
from .compliance import (
    PartialDecryption, RequestLog, RevocationRequest, combine_partials, guardian_approve,
    guardian_keygen, revoker_decrypt, revoker_request, share_from_json, share_to_json,
)
from .errors import NotFoundError, PoolError, ValidationError, exit_code_for
from .primitives import Rng, compress, decompress
from .ledger import commitment_of, nullifier
from .sim import Chain, Client, default_config
from .stealth import AuxData, scan

def _rng(args) -> Rng:
    return Rng(args.seed) if args.seed is not None else Rng()


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise NotFoundError(f"{path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from None


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


@contextlib.contextmanager
def _locked(args):
    """Advisory lock shared by all invocations touching the same ledger."""
    lock = Path(str(args.ledger) + ".lock")
    with open(lock, "a") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _chain(args) -> Chain:
    if not Path(args.config).exists():
        raise NotFoundError(f"no pool config at {args.config}; run init first")
    return Chain.load(_read_json(args.config), args.ledger)


def _account(path) -> ShieldedAccount:
    return ShieldedAccount.from_json(_read_json(path))


def _client(args, chain) -> Client:
    return Client(_account(args.keys), chain, _rng(args))


def _resolve(chain: Chain, who: str) -> ShieldedAddress:
    addr = chain.registry.lookup(who)
    if addr is not None:
        return addr
    try:
        return ShieldedAddress.from_hex(who)
    except (ValueError, PoolError):
        raise NotFoundError(f"{who!r} is neither a registered handle nor an address") from None


def _event_out(ev) -> dict:
    out = {"seq": ev.seq, "block": ev.block, "kind": ev.kind}
    if ev.error:
        raise _Rejected(ev.error)
    if "tx_id" in ev.payload:
        out["tx_id"] = ev.payload["tx_id"]
    out["receipt"] = ev.receipt
    return out


class _Rejected(Exception):
    def __init__(self, error):
        super().__init__(error["message"])
        self.error = error


# -- commands ------------------------------------------------------------

def cmd_init(args):
    cfg_path, ledger = Path(args.config), Path(args.ledger)
    if (cfg_path.exists() or ledger.exists()) and not args.force:
        raise ValidationError("config or ledger already exists (use --force to overwrite)")
    chain = Chain.create(default_config(args.depth), _rng(args))
    _write_json(cfg_path, chain.config)
    ledger.write_text("")
    return {"config": str(cfg_path), "ledger": str(ledger), "tree_depth": args.depth}


def cmd_keygen(args):
    path = Path(args.keys)
    if path.exists() and not args.force:
        raise ValidationError(f"{path} already exists (use --force to overwrite)")
    account = new_account(_rng(args))
    account.save(path)
    return {"keys": str(path), "address": account.address.hex()}


def cmd_register(args):
    chain = _chain(args)
    account = _account(args.keys)
    ev = chain.register(args.handle, account.address)
    return {"seq": ev.seq, "handle": args.handle, "address": account.address.hex()}


def _balance(args, chain):
    if args.viewkey:
        notes = _view_scan(chain, _read_json(args.viewkey))
    else:
        client = _client(args, chain)
        client.wallet.sync(chain.pool)
        notes = [dict(asset=n.asset, value=n.value, spent=chain.pool.is_spent(n.nullifier))
                 for _, n in sorted(client.wallet.notes.items())]
    totals = {}
    for n in notes:
        if not n["spent"]:
            totals[str(n["asset"])] = totals.get(str(n["asset"]), 0) + n["value"]
    return notes, totals


def cmd_balance(args):
    _, totals = _balance(args, _chain(args))
    return {"balances": totals}


def cmd_scan(args):
    chain = _chain(args)
    if args.viewkey:
        notes = _view_scan(chain, _read_json(args.viewkey))
    else:
        client = _client(args, chain)
        client.wallet.sync(chain.pool)
        notes = [{"leaf_index": n.leaf_index, "asset": n.asset, "value": n.value,
                  "spent": chain.pool.is_spent(n.nullifier)}
                 for _, n in sorted(client.wallet.notes.items())]
    return {"notes": notes}


def _view_scan(chain: Chain, view: dict) -> list:
    """Scan with an exported view key: (p, S) suffice to find notes and to
    recompute their nullifiers, but not to spend them."""
    p = int(view["p"], 16)
    S = decompress(bytes.fromhex(view["S"]))
    notes = []
    for rec in chain.pool.outputs(0):
        if rec.aux is None:
            continue
        aux = AuxData.from_bytes(rec.aux)
        secrets = scan(aux, p, S)
        if secrets is None:
            continue
        asset, value = rec.public or (secrets.asset, secrets.value)
        if commitment_of(asset, aux.x, value) != rec.commitment:
            continue
        nf = nullifier(rec.leaf_index, rec.commitment, secrets.delta)
        notes.append({"leaf_index": rec.leaf_index, "asset": asset, "value": value,
                      "spent": chain.pool.is_spent(nf)})
    return notes


def cmd_export_viewkey(args):
    account = _account(args.keys)
    out = {"p": f"{account.p:064x}", "S": compress(account.S).hex(),
           "P": compress(account.P).hex()}
    if args.out:
        _write_json(args.out, out)
    return out


def cmd_deposit(args):
    chain = _chain(args)
    client = _client(args, chain)
    to = _resolve(chain, args.to) if args.to else None
    ev = client.deposit(args.asset, args.value, args.source, to)
    return _event_out(ev)


def cmd_transfer(args):
    chain = _chain(args)
    client = _client(args, chain)
    ev, _ = client.transfer(_resolve(chain, args.to), args.asset, args.value, args.fee_asset)
    return _event_out(ev)


def cmd_withdraw(args):
    chain = _chain(args)
    client = _client(args, chain)
    ev, _ = client.withdraw(args.asset, args.value, args.recipient, args.fee_asset)
    return _event_out(ev)


def cmd_convert(args):
    chain = _chain(args)
    client = _client(args, chain)
    data = args.min_out.to_bytes(32, "big") if args.min_out else b""
    fee_asset = args.asset if args.fee_asset is None else args.fee_asset
    ev, _ = client.convert(args.proxy, args.asset, args.value, fee_asset, data)
    return _event_out(ev)


def cmd_guardian_keygen(args):
    chain = _chain(args)
    revoker = _account(args.revoker_keys)
    gs = guardian_keygen(args.t, args.n, _rng(args))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for share in gs.shares:
        path = out_dir / f"guardian-{share.index}.json"
        _write_json(path, dict(share_to_json(share), t=gs.t, n=gs.n))
        files.append(str(path))
    ev = chain.setup_compliance(gs.public_json(), revoker.address.hex())
    return {"seq": ev.seq, "guardians": gs.public_json(), "revoker": ev.payload["revoker"],
            "shares": files}


def _request_log(chain: Chain) -> RequestLog:
    """The public request log: compliance-request events, mirrored into a
    JSON-lines file next to the ledger."""
    cfg = chain.pool.config
    if not cfg.revoker:
        raise ValidationError("no revoker registered; run guardian-keygen first")
    mirror = Path(str(chain.ledger_path) + ".requests.jsonl") if chain.ledger_path else None
    log = RequestLog(ShieldedAddress.from_hex(cfg.revoker).S, mirror)
    for ev in chain.events:
        if ev.kind == "compliance-request" and ev.error is None:
            log.append(RevocationRequest.from_json(ev.payload["request"]))
    return log


def _find_request(chain: Chain, request_id: str) -> RevocationRequest:
    for ev in chain.events:
        if ev.kind == "compliance-request" and ev.payload["request_id"] == request_id:
            return RevocationRequest.from_json(ev.payload["request"])
    raise NotFoundError(f"no request {request_id} on the log")


def cmd_request_deanon(args):
    chain = _chain(args)
    txid = bytes.fromhex(args.tx)
    chain.envelope(txid)
    log = _request_log(chain)
    req = revoker_request(log, txid, args.justification, _account(args.keys))
    ev = chain.log_compliance("compliance-request",
                              {"request_id": req.request_id.hex(), "request": req.to_json()})
    return {"seq": ev.seq, "request_id": req.request_id.hex(), "tx_id": args.tx}


def cmd_guardian_approve(args):
    chain = _chain(args)
    req = _find_request(chain, args.request)
    share = share_from_json(_read_json(args.share))
    partial = guardian_approve(_request_log(chain), req, share, chain.envelope(req.tx_id))
    ev = chain.log_compliance("compliance-approval", {"partial": partial.to_json()})
    return {"seq": ev.seq, "index": share.index, "request_id": args.request}


def cmd_reveal(args):
    chain = _chain(args)
    req = _find_request(chain, args.request)
    partials = {}
    for ev in chain.events:
        if ev.kind == "compliance-approval":
            p = PartialDecryption.from_json(ev.payload["partial"])
            if p.request_id == req.request_id:
                partials.setdefault(p.index, p)
    threshold = chain.pool.config.guardians["t"]
    env = chain.envelope(req.tx_id)
    inner = combine_partials(env, list(partials.values())[:max(threshold, 1)], threshold)
    plain = revoker_decrypt(inner, _account(args.keys).p, req.tx_id)
    return {"tx_id": req.tx_id.hex(), "record": json.loads(plain)}


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shieldpool", description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="pool.json", help="pool config file")
    ap.add_argument("--ledger", default="ledger.jsonl", help="append-only event ledger")
    ap.add_argument("--keys", default="keys.json", help="shielded account key file")
    ap.add_argument("--seed", type=int, default=None, help="deterministic randomness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create config and empty ledger")
    p.add_argument("--depth", type=int, default=20)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init, lock=True)

    p = sub.add_parser("keygen", help="create a shielded account key file")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_keygen, lock=False)

    p = sub.add_parser("register", help="post the shielded address under a handle")
    p.add_argument("handle")
    p.set_defaults(func=cmd_register, lock=True)

    for name, func in (("balance", cmd_balance), ("scan", cmd_scan)):
        p = sub.add_parser(name, help=f"{name} using the key file or an exported view key")
        p.add_argument("--viewkey", help="exported view key file (read-only access)")
        p.set_defaults(func=func, lock=True)

    p = sub.add_parser("export-viewkey", help="print (and optionally save) the view key")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_viewkey, lock=False)

    p = sub.add_parser("deposit", help="deposit from a public wallet")
    p.add_argument("--asset", type=int, required=True)
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--source", default="wallet", help="public source handle (screened)")
    p.add_argument("--to", help="recipient handle or address, default self")
    p.set_defaults(func=cmd_deposit, lock=True)

    p = sub.add_parser("transfer", help="shielded transfer")
    p.add_argument("--to", required=True, help="recipient handle or address hex")
    p.add_argument("--asset", type=int, required=True)
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--fee-asset", type=int)
    p.set_defaults(func=cmd_transfer, lock=True)

    p = sub.add_parser("withdraw", help="withdraw to a public recipient")
    p.add_argument("--asset", type=int, required=True)
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--recipient", required=True)
    p.add_argument("--fee-asset", type=int)
    p.set_defaults(func=cmd_withdraw, lock=True)

    p = sub.add_parser("convert", help="convert through a registered proxy")
    p.add_argument("--proxy", required=True)
    p.add_argument("--asset", type=int, required=True)
    p.add_argument("--value", type=int, required=True)
    p.add_argument("--fee-asset", type=int)
    p.add_argument("--min-out", type=int, default=0)
    p.set_defaults(func=cmd_convert, lock=True)

    p = sub.add_parser("guardian-keygen", help="create guardian shares and register the revoker")
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--revoker-keys", required=True)
    p.add_argument("--out-dir", default="guardians")
    p.set_defaults(func=cmd_guardian_keygen, lock=True)

    p = sub.add_parser("request-deanon", help="revoker: log a signed request (uses --keys)")
    p.add_argument("--tx", required=True)
    p.add_argument("--justification", required=True)
    p.set_defaults(func=cmd_request_deanon, lock=True)

    p = sub.add_parser("guardian-approve", help="guardian: publish a partial decryption")
    p.add_argument("--request", required=True)
    p.add_argument("--share", required=True)
    p.set_defaults(func=cmd_guardian_approve, lock=True)

    p = sub.add_parser("reveal", help="revoker: combine partials and decrypt (uses --keys)")
    p.add_argument("--request", required=True)
    p.set_defaults(func=cmd_reveal, lock=True)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        ctx = _locked(args) if args.lock else contextlib.nullcontext()
        with ctx:
            result = args.func(args)
    except PoolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(json.dumps({"error": exc.category, "message": str(exc)}, sort_keys=True))
        return exc.exit_code
    except _Rejected as exc:
        print(f"rejected: {exc}", file=sys.stderr)
        category = exc.error["category"]
        print(json.dumps({"error": category, "message": str(exc)}, sort_keys=True))
        return exit_code_for(category)
    print(json.dumps(result, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
