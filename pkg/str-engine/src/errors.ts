export class MissingWeightsError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "MissingWeightsError";
  }
}

export class UnreadableImageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UnreadableImageError";
  }
}

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}
