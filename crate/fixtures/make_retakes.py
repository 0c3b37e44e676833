"""Writes the retake fixture corpus under fixtures/replays/retakes/.

Situation S1 on de_inferno_lite: three T alive on BombsiteB with the bomb
planted, two CT alive in the CT area. 57 rounds reach S1 and end in a
bomb_exploded / elimination_ct / bomb_defused (51 T wins, 6 CT wins).
Distractors: S2 rounds (CT pair in Banana) and S1 positions before a plant.
"""
import json
import random
from pathlib import Path

rng = random.Random(2021)
OUT = Path(__file__).parent / "replays" / "retakes"

T_SPAWN = (-1650, -350, -1350, 350, 0)
CT_SPAWN = (950, -150, 1450, 550, 0)
SITE_B = (-250, 1650, 450, 2350, 60)
CT_AREA = (550, 1050, 1050, 1550, 40)
BANANA = (-850, 450, -650, 1350, 50)


def pt(rect):
    x0, y0, x1, y1, z = rect
    return [rng.randint(x0, x1), rng.randint(y0, y1), z]


def player(pid, side, pos, alive, equip):
    return dict(player_id=pid, side=side, position=pos, hp=rng.randint(30, 100) if alive else 0,
                armor=100 if alive else 0, equipment_value=equip if alive else 0,
                grenade_count=rng.randint(0, 3) if alive else 0, alive=alive)


def frame(t, planted, ts, cts):
    return dict(t=t, players=ts + cts, bomb_planted=planted)


def round_doc(n, kind, outcome, score):
    tid = [f"t{i}" for i in range(5)]
    cid = [f"c{i}" for i in range(5)]
    equip = 4700
    frames = [frame(0.0, False,
                    [player(p, "T", pt(T_SPAWN), True, 800) for p in tid],
                    [player(p, "CT", pt(CT_SPAWN), True, 800) for p in cid])]
    kills = []
    for i, v in enumerate(["c2", "c3", "c4", "t3", "t4"]):
        kills.append(dict(t=20.0 + i, actor_id="t0" if v[0] == "c" else "c0", victim_id=v,
                          position=pt(SITE_B)))
    planted = kind != "preplant"
    ct_rect = BANANA if kind == "s2" else CT_AREA

    def mid(t, planted_now):
        return frame(t, planted_now,
                     [player(p, "T", pt(SITE_B), p in tid[:3], equip) for p in tid],
                     [player(p, "CT", pt(ct_rect), p in cid[:2], equip) for p in cid])

    frames += [mid(40.0 + k, planted) for k in range(3)]
    plants = [dict(t=40.0, actor_id="t0", position=pt(SITE_B))] if planted else []
    winner = {"bomb_exploded": "T", "elimination_ct": "T", "bomb_defused": "CT",
              "elimination_t": "CT"}[outcome]
    last = frames[-1]
    end_t = {"bomb_exploded": 75.0, "elimination_ct": 50.0, "bomb_defused": 55.0,
             "elimination_t": 50.0}[outcome]
    if outcome == "elimination_ct":
        dead = ["c0", "c1"]
    elif outcome in ("bomb_defused", "elimination_t"):
        dead = ["t0", "t1", "t2"]
    else:
        dead = []
    for v in dead:
        kills.append(dict(t=end_t - 1, actor_id="c0" if v[0] == "t" else "t0", victim_id=v,
                          position=pt(SITE_B)))
    players = []
    for p in last["players"]:
        q = dict(p)
        q["position"] = list(p["position"])
        if p["player_id"] in dead:
            q.update(hp=0, armor=0, equipment_value=0, grenade_count=0, alive=False)
        players.append(q)
    frames.append(dict(t=end_t, players=players, bomb_planted=planted))
    doc = dict(round_number=n, winner=winner, end_reason=outcome,
               score_ct=score["CT"], score_t=score["T"], frames=frames, kills=kills,
               grenades=[], damages=[], bomb_plants=plants)
    score[winner] += 1
    return doc


def main():
    plan = ([("s1", "bomb_exploded")] * 30 + [("s1", "elimination_ct")] * 21
            + [("s1", "bomb_defused")] * 6 + [("s2", "bomb_exploded")] * 7
            + [("s2", "bomb_defused")] * 1 + [("preplant", "elimination_t")] * 8)
    rng.shuffle(plan)
    OUT.mkdir(parents=True, exist_ok=True)
    per_match = 20
    for mi in range(0, len(plan), per_match):
        chunk = plan[mi:mi + per_match]
        # Scores are per side at round start; this corpus ignores the half swap.
        score = {"T": 0, "CT": 0}
        # Sides swap at round 16, so only rounds 1..15 keep "Lynx" on CT.
        rounds = [round_doc(i + 1, k, o, score) for i, (k, o) in enumerate(chunk)]
        idx = mi // per_match + 1
        doc = dict(match_id=f"retake-{idx:02d}", date=f"2021-03-{idx:02d}",
                   competition_name="Retake Fixture Cup", map="de_inferno_lite",
                   teams=dict(ct_start="Lynx", t_start="Orca"), rounds=rounds)
        (OUT / f"retake-{idx:02d}.json").write_text(json.dumps(doc, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
