"""Reference protocol proxies.

A proxy exposes ``convert(assets, values, fee_asset, fee_value, data)`` and
returns ``(out_assets, out_values)``. The fee must come back as one of the
outputs; the convertor deducts it.
"""

from .errors import ConvertError


def _single_input(assets, values):
    if len(assets) != 1:
        raise ConvertError("proxy takes exactly one input asset")
    return assets[0], values[0]


class MockSwap:
    """Constant-product pool between two assets, no swap fee, floor rounding."""

    def __init__(self, asset_a: int, asset_b: int, reserve_a: int, reserve_b: int):
        self.reserves = {asset_a: reserve_a, asset_b: reserve_b}

    def amount_out(self, asset_in: int, amount_in: int) -> int:
        r_in = self.reserves[asset_in]
        r_out = self.reserves[self._other(asset_in)]
        return amount_in * r_out // (r_in + amount_in)

    def _other(self, asset: int) -> int:
        if asset not in self.reserves:
            raise ConvertError(f"asset {asset} is not in this pair")
        return next(a for a in self.reserves if a != asset)

    def convert(self, assets, values, fee_asset, fee_value, data=b""):
        asset_in, amount = _single_input(assets, values)
        asset_out = self._other(asset_in)
        keep = 0
        if fee_asset == asset_in:
            # fee withheld from the input rather than swapped
            if fee_value > amount:
                raise ConvertError("input smaller than fee")
            keep, amount = fee_value, amount - fee_value
        out = self.amount_out(asset_in, amount)
        min_out = int.from_bytes(data, "big") if data else 0
        if out < min_out:
            raise ConvertError(f"slippage: got {out}, wanted at least {min_out}")
        self.reserves[asset_in] += amount
        self.reserves[asset_out] -= out
        if keep:
            return (asset_out, asset_in), (out, keep)
        return (asset_out,), (out,)

    def state(self):
        return {str(a): r for a, r in sorted(self.reserves.items())}


class MockStake:
    """Wraps an underlying asset 1:1 into a receipt token."""

    def __init__(self, underlying: int, wrapped: int):
        self.underlying = underlying
        self.wrapped = wrapped
        self.staked = 0

    def convert(self, assets, values, fee_asset, fee_value, data=b""):
        asset_in, amount = _single_input(assets, values)
        if asset_in != self.underlying:
            raise ConvertError(f"stake proxy only accepts asset {self.underlying}")
        if fee_asset == self.underlying:
            if fee_value > amount:
                raise ConvertError("input smaller than fee")
            self.staked += amount - fee_value
            return (self.wrapped, self.underlying), (amount - fee_value, fee_value)
        self.staked += amount
        return (self.wrapped,), (amount,)

    def state(self):
        return {"staked": self.staked}
