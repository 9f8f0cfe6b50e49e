"""JSON document formats for automata, nested automata, monitor-counter
automata, and chains.

Rationals are always ``"p/q"`` strings (no floats in exact pipelines);
silent weights are ``"silent"``; infinities serialize as ``"+inf"`` /
``"-inf"`` and the empty-run value as ``"bottom"``.  Documents round-trip
``parse -> serialize -> parse`` to an identical canonical form.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Dict, Mapping

from .core import (
    BOTTOM, POS_INF, NEG_INF, FinValFn, InfValFn, LabeledAutomaton,
    QuantaError, WeightedAutomaton, _Bottom, _Infinity,
)
from .markov import LabeledMarkovChain
from .mca import MonitorCounterAutomaton, START, TERMINATE
from .nwa import NestedWeightedAutomaton


class SchemaError(QuantaError):
    """Malformed document."""


class NondeterministicInput(QuantaError):
    """The document describes a non-deterministic automaton; probabilistic
    analysis of non-deterministic automata is undecidable and refused."""

    def __init__(self, clashes):
        super().__init__(
            "duplicate transitions for " + ", ".join(map(repr, clashes)))
        self.clashes = tuple(clashes)


def parse_rational(text) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise SchemaError(f"rational must be a 'p/q' string, got {text!r}")
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"bad rational {text!r}: {exc}") from None


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def format_value(x) -> str:
    if isinstance(x, _Bottom):
        return "bottom"
    if isinstance(x, _Infinity):
        return "+inf" if x == POS_INF else "-inf"
    return format_rational(x)


def parse_value(text):
    if text == "bottom":
        return BOTTOM
    if text == "+inf":
        return POS_INF
    if text == "-inf":
        return NEG_INF
    return parse_rational(text)


def _need(doc: Mapping, key: str):
    if key not in doc:
        raise SchemaError(f"missing field {key!r}")
    return doc[key]


def _value_fn(doc: Mapping):
    name = _need(doc, "valueFunction")
    if name in InfValFn._KINDS:
        return InfValFn(name)
    if name == "bsum":
        return FinValFn("bsum", int(_need(doc, "bound")))
    if name in FinValFn._KINDS:
        return FinValFn(name)
    raise SchemaError(f"unknown value function {name!r}")


def _check_deterministic(entries):
    seen = set()
    clashes = []
    for key in entries:
        if key in seen:
            clashes.append(key)
        seen.add(key)
    if clashes:
        raise NondeterministicInput(clashes)


def _parse_transitions(doc: Mapping, field: str, convert):
    out = {}
    keys = []
    for t in _need(doc, "transitions"):
        key = (_need(t, "from"), _need(t, "letter"))
        keys.append(key)
        out[key] = (_need(t, "to"), convert(t))
    _check_deterministic(keys)
    return out


def load_weighted_automaton(doc: Mapping) -> WeightedAutomaton:
    fn = _value_fn(doc)
    mode = "infinite" if isinstance(fn, InfValFn) else "finite"

    def weight(t):
        w = _need(t, "weight")
        return BOTTOM if w == "silent" else int(w)

    try:
        return WeightedAutomaton(
            alphabet=tuple(_need(doc, "alphabet")),
            states=tuple(_need(doc, "states")),
            initial=_need(doc, "initial"),
            transitions=_parse_transitions(doc, "transitions", weight),
            accepting=frozenset(_need(doc, "accepting")),
            value_fn=fn, word_mode=mode)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def dump_weighted_automaton(wa: WeightedAutomaton) -> dict:
    doc = {
        "alphabet": list(wa.alphabet),
        "states": [str(s) for s in wa.states],
        "initial": str(wa.initial),
        "accepting": sorted(str(s) for s in wa.accepting),
        "valueFunction": wa.value_fn.kind,
        "transitions": [
            {"from": str(q), "letter": a, "to": str(q2),
             "weight": "silent" if isinstance(w, _Bottom) else int(w)}
            for (q, a), (q2, w) in sorted(wa.transitions.items(), key=repr)
        ],
    }
    if wa.value_fn.kind == "bsum":
        doc["bound"] = wa.value_fn.bound
    return doc


def load_nwa(doc: Mapping) -> NestedWeightedAutomaton:
    master_doc = _need(doc, "master")
    try:
        master = LabeledAutomaton(
            alphabet=tuple(_need(master_doc, "alphabet")),
            states=tuple(_need(master_doc, "states")),
            initial=_need(master_doc, "initial"),
            transitions=_parse_transitions(
                master_doc, "transitions", lambda t: int(_need(t, "label"))),
            accepting=frozenset(_need(master_doc, "accepting")))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    fn_name = _need(doc, "masterFunction")
    if fn_name not in InfValFn._KINDS:
        raise SchemaError(f"unknown master value function {fn_name!r}")
    slaves = tuple(load_weighted_automaton(d) for d in _need(doc, "slaves"))
    try:
        nwa = NestedWeightedAutomaton(master=master, master_fn=InfValFn(fn_name),
                                      slaves=slaves)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    declared = doc.get("dummies")
    if declared is not None and frozenset(declared) != nwa.dummy_indices:
        raise SchemaError(
            f"declared dummies {sorted(declared)} do not match the slaves "
            f"(structural dummies: {sorted(nwa.dummy_indices)})")
    return nwa


def dump_nwa(nwa: NestedWeightedAutomaton) -> dict:
    master = nwa.master
    return {
        "master": {
            "alphabet": list(master.alphabet),
            "states": [str(s) for s in master.states],
            "initial": str(master.initial),
            "accepting": sorted(str(s) for s in master.accepting),
            "transitions": [
                {"from": str(q), "letter": a, "to": str(q2), "label": label}
                for (q, a), (q2, label) in sorted(master.transitions.items(),
                                                  key=repr)
            ],
        },
        "masterFunction": nwa.master_fn.kind,
        "slaves": [dump_weighted_automaton(s) for s in nwa.slaves],
        "dummies": sorted(nwa.dummy_indices),
    }


def load_mca(doc: Mapping) -> MonitorCounterAutomaton:
    fn_name = _need(doc, "valueFunction")
    if fn_name not in InfValFn._KINDS:
        raise SchemaError(f"unknown value function {fn_name!r}")

    def instructions(t):
        out = []
        for op in _need(t, "instructions"):
            if op in (START, TERMINATE):
                out.append(op)
            elif isinstance(op, int):
                out.append(op)
            else:
                raise SchemaError(f"bad instruction {op!r}")
        return tuple(out)

    trans = _parse_transitions(doc, "transitions", instructions)
    counters = doc.get("counters")
    if counters is None:
        counters = max((len(i) for (_q2, i) in trans.values()), default=0)
    try:
        return MonitorCounterAutomaton(
            alphabet=tuple(_need(doc, "alphabet")),
            states=tuple(_need(doc, "states")),
            initial=_need(doc, "initial"),
            transitions=trans,
            accepting=frozenset(_need(doc, "accepting")),
            value_fn=InfValFn(fn_name), counters=int(counters))
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def dump_mca(mca: MonitorCounterAutomaton) -> dict:
    return {
        "alphabet": list(mca.alphabet),
        "states": [str(s) for s in mca.states],
        "initial": str(mca.initial),
        "accepting": sorted(str(s) for s in mca.accepting),
        "valueFunction": mca.value_fn.kind,
        "counters": mca.counters,
        "transitions": [
            {"from": str(q), "letter": a, "to": str(q2),
             "instructions": list(instr)}
            for (q, a), (q2, instr) in sorted(mca.transitions.items(),
                                              key=repr)
        ],
    }


def load_chain(doc: Mapping) -> LabeledMarkovChain:
    probs: Dict = {}
    weights: Dict = {}
    for e in _need(doc, "edges"):
        edge = (_need(e, "from"), _need(e, "letter"), _need(e, "to"))
        if edge in probs:
            raise SchemaError(f"duplicate edge {edge!r}")
        probs[edge] = parse_rational(_need(e, "prob"))
        if "weight" in e:
            w = e["weight"]
            weights[edge] = BOTTOM if w == "silent" else int(w)
    try:
        return LabeledMarkovChain(
            alphabet=tuple(_need(doc, "alphabet")),
            states=tuple(_need(doc, "states")),
            initial=_need(doc, "initial"),
            edge_prob=probs, weights=weights)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def dump_chain(m: LabeledMarkovChain) -> dict:
    edges = []
    for (s, a, s2), p in sorted(m.edge_prob.items(), key=repr):
        e = {"from": str(s), "letter": a, "to": str(s2),
             "prob": format_rational(p)}
        if (s, a, s2) in m.weights:
            w = m.weights[(s, a, s2)]
            e["weight"] = "silent" if isinstance(w, _Bottom) else int(w)
        edges.append(e)
    return {
        "alphabet": list(m.alphabet),
        "states": [str(s) for s in m.states],
        "initial": str(m.initial),
        "edges": edges,
    }


_KIND_LOADERS = {
    "weighted-automaton": load_weighted_automaton,
    "nwa": load_nwa,
    "mca": load_mca,
    "chain": load_chain,
}


def load_document(doc: Mapping):
    """Dispatch on the document's ``type`` field."""
    if not isinstance(doc, Mapping):
        raise SchemaError("document must be a JSON object")
    kind = _need(doc, "type")
    loader = _KIND_LOADERS.get(kind)
    if loader is None:
        raise SchemaError(f"unknown document type {kind!r}")
    return loader(doc)


def dump_document(obj) -> dict:
    if isinstance(obj, NestedWeightedAutomaton):
        return {"type": "nwa", **dump_nwa(obj)}
    if isinstance(obj, MonitorCounterAutomaton):
        return {"type": "mca", **dump_mca(obj)}
    if isinstance(obj, WeightedAutomaton):
        return {"type": "weighted-automaton", **dump_weighted_automaton(obj)}
    if isinstance(obj, LabeledMarkovChain):
        return {"type": "chain", **dump_chain(obj)}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return load_document(doc)


def dumps(obj) -> str:
    return json.dumps(dump_document(obj), indent=2, sort_keys=True)
