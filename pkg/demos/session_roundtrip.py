"""Ask-tell session with durable logs: propose, observe, crash, resume.

A session runs a few rounds against a toy oracle, then the in-memory store
is thrown away and rebuilt from the event log alone; state hashes prove the
recovered session is bit-identical to the one that "crashed".
"""

import tempfile

import numpy as np

from losbo.session import SessionStore, replay_session_log


def oracle(points):
    x = np.array([p[0] for p in points])
    return -((x - 0.3) ** 2), 0.5 - np.abs(x)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        store = SessionStore(tmp)
        session = store.create_session(
            {
                "domain": {"lower": [-1.0], "upper": [1.0]},
                "budget": 10,
                "batch_size": 2,
                "candidate_count": 64,
                "fit_restarts": 1,
                "fit_iterations": 8,
                "seed": 11,
            },
            [
                {"x": [0.0], "y_f": -0.09, "y_g": 0.5},
                {"x": [0.1], "y_f": -0.04, "y_g": 0.4},
            ],
        )
        sid = session.id
        print(f"session {sid}: status={session.status}")

        for round_no in range(4):
            proposal = store.get_proposal(sid)
            y_f, y_g = oracle(proposal["points"])
            results = [
                {"y_f": float(f), "y_g": float(g)} for f, g in zip(y_f, y_g)
            ]
            snap = store.post_observation(sid, results)
            print(
                f"  round {round_no}: proposed {len(results)} points,"
                f" n_observations={snap['n_observations']},"
                f" status={snap['status']}"
            )

        before = store.state_hash(sid)

        # simulate a crash: forget the store, rebuild purely from the log
        recovered = SessionStore(tmp)
        after = recovered.state_hash(sid)
        print(f"\nstate hash before crash: {before[:16]}...")
        print(f"state hash after resume: {after[:16]}...")
        print(f"recovered exactly: {before == after}")

        verdict = replay_session_log(session.log_path)
        print(
            f"log replay: seq={verdict['last_seq']}"
            f" status={verdict['status']} error={verdict['error']}"
        )


if __name__ == "__main__":
    main()
