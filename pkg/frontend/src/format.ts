// Every number shown anywhere in the UI goes through one of these, so the
// on-screen text is a fixed function of the served value and nothing else.

const nf0 = new Intl.NumberFormat("en-GB", { maximumFractionDigits: 0 });
const nf1 = new Intl.NumberFormat("en-GB", {
  minimumFractionDigits: 1,
  maximumFractionDigits: 1,
});
const nf2 = new Intl.NumberFormat("en-GB", {
  minimumFractionDigits: 2,
  maximumFractionDigits: 2,
});
const nf3 = new Intl.NumberFormat("en-GB", {
  minimumFractionDigits: 3,
  maximumFractionDigits: 3,
});

export const NA = "n/a";

export function fmtCount(v: number): string {
  return nf0.format(v);
}

export function fmtVolume(v: number): string {
  return nf1.format(v);
}

export function fmtKm(v: number): string {
  return `${nf1.format(v)} km`;
}

export function fmtKm2(v: number): string {
  return `${nf1.format(v)} km²`;
}

export function fmtRatio(v: number): string {
  return nf2.format(v);
}

export function fmtPct(v: number): string {
  return `${nf1.format(v)}%`;
}

export function fmtMoney(v: number): string {
  return `£${nf0.format(v)}`;
}

export function fmtKg(v: number): string {
  return `${nf0.format(v)} kg`;
}

export function fmtDeaths(v: number): string {
  return nf3.format(v);
}

/** Raw value as text, the form the data tabs use. */
export function fmtRaw(v: number): string {
  return String(v);
}

export function orNa(v: unknown, fmt: (n: number) => string): string {
  return typeof v === "number" && Number.isFinite(v) ? fmt(v) : NA;
}

export const ALL_FORMATTERS: readonly ((v: number) => string)[] = [
  fmtCount,
  fmtVolume,
  fmtKm,
  fmtKm2,
  fmtRatio,
  fmtPct,
  fmtMoney,
  fmtKg,
  fmtDeaths,
  fmtRaw,
];
