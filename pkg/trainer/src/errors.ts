export class TrainerError extends Error {}

/** A sequence contains tokens outside the model's vocabulary. */
export class VocabMismatch extends TrainerError {}

/** A prompt alone reaches or exceeds the model's positional range. */
export class SequenceTooLong extends TrainerError {}
