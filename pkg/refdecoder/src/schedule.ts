/**
 * Stream scheduling for joint generation, duplicated locally on purpose so
 * the adapter stays dependency-free: the next token goes to the transcript
 * stream iff (1 - gamma) * (1 + countTranslation) > gamma * (1 + countTranscript).
 */

export type StreamName = "transcript" | "translation";

export interface ScheduleState {
  countSt: number;
  countTt: number;
  stDone: boolean;
  ttDone: boolean;
}

export function freshState(): ScheduleState {
  return { countSt: 0, countTt: 0, stDone: false, ttDone: false };
}

export function nextStream(state: ScheduleState, gamma: number): StreamName {
  if (state.stDone && state.ttDone) {
    throw new Error("both streams are done");
  }
  const wantsTranscript = (1.0 - gamma) * (1 + state.countTt) > gamma * (1 + state.countSt);
  if (wantsTranscript) {
    return state.stDone ? "translation" : "transcript";
  }
  return state.ttDone ? "transcript" : "translation";
}
