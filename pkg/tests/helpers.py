from datetime import date, timedelta

from concept_cnn.data import EncounterRecord


def make_record(vocab, encounter_id="E1", admit=date(2010, 1, 1), outcome=0, **assignments):
    full = {}
    for entry in vocab.entries:
        if entry.concept_id in assignments:
            full[entry.concept_id] = assignments[entry.concept_id]
        else:
            full[entry.concept_id] = entry.default_label or entry.labels[0]
    return EncounterRecord(encounter_id, admit, outcome, full)


def make_records(vocab, n, start=date(2010, 1, 1)):
    return [
        make_record(vocab, encounter_id=f"E{i:04d}", admit=start + timedelta(days=i), outcome=i % 2)
        for i in range(n)
    ]
