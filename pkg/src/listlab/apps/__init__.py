from .transfer import (
    AnonAssetTransfer,
    NotRepresentable,
    PourTx,
    TokenMaterial,
    anonymity_set_size,
    choose_leader,
    discretize,
    mint_token,
    pour,
    uncommit,
    verify_tx,
)
from .evote import Ballot, EVoteObject, make_ballot

__all__ = [
    "AnonAssetTransfer",
    "Ballot",
    "EVoteObject",
    "NotRepresentable",
    "PourTx",
    "TokenMaterial",
    "anonymity_set_size",
    "choose_leader",
    "discretize",
    "make_ballot",
    "mint_token",
    "pour",
    "uncommit",
    "verify_tx",
]
