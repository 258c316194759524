"""Diagonal pigeon placement spoken over the solver's wire protocol.

Learns which atoms are pigeons, holes, and placements from the atom
registration messages, freezes every named atom, and answers the first
choice request with the whole diagonal inHole(i,i) as one queued list.
When pigeons outnumber holes it stops the search instead; any further
choice requests hand control back to the solver's default policy.
"""

import json
import sys


def parse_name(name):
    if "(" not in name or not name.endswith(")"):
        return name, ()
    func, _, rest = name.partition("(")
    return func, tuple(rest[:-1].split(","))


def main():
    atoms = {}
    pigeons = set()
    holes = set()
    in_hole = {}
    asked = False

    def reply(obj):
        print(json.dumps(obj, separators=(",", ":")), flush=True)

    for line in sys.stdin:
        msg = json.loads(line)
        kind = msg.get("e")
        if kind == "atom":
            atoms[msg["id"]] = msg["name"]
            reply({"ack": True})
        elif kind == "parsing_done":
            for atom, name in atoms.items():
                func, args = parse_name(name)
                if func == "pigeon":
                    pigeons.add(int(args[0]))
                elif func == "hole":
                    holes.add(int(args[0]))
                elif func == "inHole":
                    in_hole[int(args[0]), int(args[1])] = atom
            reply({"frozen": sorted(atoms)})
        elif kind == "choice_required":
            if len(pigeons) > len(holes):
                reply({"stop": True})
            elif not asked:
                asked = True
                reply([in_hole[p, p] for p in sorted(pigeons)])
            else:
                reply({"fallback": 0})
        else:
            reply({"ack": True})


if __name__ == "__main__":
    main()
