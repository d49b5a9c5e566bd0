#include "converse/resources.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "converse/error.hpp"

namespace converse {

void Corpus::validate() const {
  if (items.empty()) throw InvalidArgument("corpus is empty");
  for (std::size_t i = 0; i < items.size(); ++i)
    if (text::trim(items[i].text).empty())
      throw InvalidArgument("corpus item " + std::to_string(i) + " has empty text");
}

Corpus Corpus::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open corpus " + path.string());
  Corpus c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw SchemaError("corpus record needs a string 'text'", line_no);
    CorpusItem item;
    item.text = j["text"].get<std::string>();
    item.source = j.value("source", std::string{});
    if (j.contains("keywords")) {
      WordSet kw;
      for (const auto& k : j["keywords"]) kw.insert(text::to_lower(k.get<std::string>()));
      item.keywords = std::move(kw);
    }
    c.items.push_back(std::move(item));
  }
  c.validate();
  return c;
}

void Corpus::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  for (const auto& item : items) {
    nlohmann::json j{{"text", item.text}, {"source", item.source}};
    if (item.keywords) {
      std::vector<std::string> kw(item.keywords->begin(), item.keywords->end());
      std::sort(kw.begin(), kw.end());
      j["keywords"] = kw;
    }
    out << j.dump() << '\n';
  }
}

Corpus Corpus::from_texts(const std::vector<std::string>& texts, const std::string& source) {
  Corpus c;
  for (const auto& t : texts) c.items.push_back(CorpusItem{t, std::nullopt, source});
  return c;
}

namespace bundled {

const std::vector<std::string>& facts() {
  static const std::vector<std::string> v = {
      "Male rabbits are called bucks, females are does.",
      "The international telephone dialing code for Antarctica is 672.",
      "Honey never spoils and edible honey has been found in ancient Egyptian tombs.",
      "Octopuses have three hearts and blue blood.",
      "A group of flamingos is called a flamboyance.",
      "Bananas are berries, but strawberries are not.",
      "The Eiffel Tower can be fifteen centimeters taller during the summer.",
      "Sea otters hold hands when they sleep so they do not drift apart.",
      "A day on Venus is longer than a year on Venus.",
      "The shortest war in history lasted thirty-eight minutes.",
      "Cows have best friends and get stressed when they are separated.",
      "The human nose can detect about one trillion different scents.",
      "Wombat droppings are shaped like cubes.",
      "There are more trees on Earth than stars in the Milky Way.",
      "The heart of a blue whale is about the size of a small car.",
      "Sloths can hold their breath longer than dolphins can.",
      "Scotland has more than four hundred words for snow.",
      "A bolt of lightning is five times hotter than the surface of the sun.",
      "Butterflies taste with their feet.",
      "The dot over the letter i is called a tittle.",
      "Koalas sleep up to twenty-two hours a day.",
      "The first oranges were not orange but green.",
      "A cloud can weigh more than a million pounds.",
      "Hot water can freeze faster than cold water.",
      "Elephants are the only mammals that cannot jump.",
      "The Great Wall of China is not visible from space with the naked eye.",
      "An ostrich eye is bigger than its brain.",
      "Penguins propose to their mates with a pebble.",
      "The moon has moonquakes.",
      "Polar bears have black skin under their white fur.",
      "Cheetahs can accelerate from zero to sixty miles per hour in three seconds.",
      "Movie theaters once served popcorn to save the film industry during the depression.",
      "The longest running movie series is about a detective named Sherlock Holmes.",
      "Chess was invented in India around fifteen hundred years ago.",
      "The football World Cup is the most watched sporting event on the planet.",
      "Albert Einstein was offered the presidency of Israel in 1952.",
      "The Amazon rainforest produces about twenty percent of the oxygen on Earth.",
      "Venus is the hottest planet in our solar system.",
      "The saxophone was invented by a Belgian named Adolphe Sax.",
      "Dolphins call each other by unique whistles that work like names.",
  };
  return v;
}

const std::vector<std::string>& trump_quotes() {
  static const std::vector<std::string> v = {
      "Make America great again.",
      "I will be the greatest jobs president that God ever created.",
      "Sorry losers and haters, but my IQ is one of the highest.",
      "Part of the beauty of me is that I am very rich.",
      "We are going to win so much, you may even get tired of winning.",
      "The point is that you can never be too greedy.",
      "I think the only difference between me and the other candidates is that I am more honest.",
      "I like thinking big. If you are going to be thinking anything, you might as well think big.",
      "I will build a great wall, and nobody builds walls better than me.",
      "What separates the winners from the losers is how a person reacts to each new twist of fate.",
      "Sometimes by losing a battle you find a new way to win the war.",
      "Without passion you do not have energy, without energy you have nothing.",
  };
  return v;
}

const std::vector<std::string>& got_quotes() {
  static const std::vector<std::string> v = {
      "Winter is coming.",
      "You know nothing, Jon Snow.",
      "A Lannister always pays his debts.",
      "When you play the game of thrones, you win or you die.",
      "The night is dark and full of terrors.",
      "Chaos is a ladder.",
      "A girl has no name.",
      "Hold the door.",
      "The North remembers.",
      "I drink and I know things.",
      "Never forget what you are, the rest of the world will not.",
      "Valar morghulis, all men must die.",
  };
  return v;
}

const std::vector<std::string>& subtitle_replies() {
  static const std::vector<std::string> v = {
      "Would you like to see them?",
      "What?",
      "I know what you mean.",
      "That sounds like a lot of fun.",
      "Really? Tell me more about it.",
      "I have never thought about it that way.",
      "I like cats too, they are very independent animals.",
      "Dogs are loyal friends.",
      "My favorite movie is an old science fiction film.",
      "I watched a great movie last night about space travel.",
      "Music makes everything better.",
      "I listen to jazz when I need to relax.",
      "The weather has been strange lately.",
      "I love the rain in the autumn.",
      "Sports bring people together.",
      "Did you watch the game last night?",
      "Football is the most popular sport in the world.",
      "I think books are better than movies.",
      "Reading before bed helps me sleep.",
      "Cooking is a form of art.",
      "Pizza is my favorite food.",
      "Have you ever traveled abroad?",
      "I would love to visit Japan one day.",
      "Paris is beautiful in the spring.",
      "Space is full of mysteries.",
      "Scientists discovered a new planet last year.",
      "Technology changes so fast these days.",
      "Computers are getting smarter every year.",
      "I do not trust robots that much.",
      "Work has been tiring this week.",
      "Weekends are too short.",
      "I am glad you are here.",
      "That is a good question.",
      "I am not sure what you mean.",
      "Let us talk about something else.",
      "It depends on how you look at it.",
      "I agree with you completely.",
      "That is a very interesting point.",
      "Why do you think so?",
      "We should go to the beach sometime.",
      "I used to play the guitar when I was younger.",
      "Chess is a game of patience.",
      "I enjoy playing chess in the park.",
      "Video games can be educational.",
      "The news today was quite depressing.",
      "Politics is a difficult topic.",
      "Elections always make people nervous.",
      "History repeats itself.",
      "Art museums are so peaceful.",
      "I love painting with watercolors.",
      "Gardening is very relaxing.",
      "My garden has tomatoes and basil.",
      "Coffee in the morning is essential.",
      "Tea is better than coffee.",
      "I went hiking in the mountains.",
      "The ocean is so calm today.",
      "Birds sing every morning outside my window.",
      "Rabbits make wonderful pets.",
      "Two rabbits is a good number of rabbits.",
      "Horses are majestic animals.",
  };
  return v;
}

const std::vector<std::string>& escape_responses() {
  static const std::vector<std::string> v = {
      "Could you repeat that again?",
      "I don't know.",
      "Was that a question?",
      "I don't have an answer for this.",
      "Let's talk about something else.",
      "I'm not sure I understood that.",
      "Can you say that in a different way?",
      "That is interesting, tell me more.",
      "Hmm, I need to think about that.",
      "What do you mean by that?",
      "I'm not sure what to say.",
      "Could you explain that a bit more?",
      "Let's change the topic.",
      "I didn't quite get that.",
      "Interesting. Why do you say that?",
      "I have no idea.",
      "Can we talk about something else?",
      "That's a tough one.",
      "I'm still learning about that.",
      "Tell me more about yourself.",
      "What would you like to talk about?",
      "I would really like to talk about news, politics or movies.",
      "Do you want to hear an interesting fact?",
      "Sorry, I didn't catch that.",
      "Let me think about that for a moment.",
      "That's beyond what I know.",
      "Maybe we could discuss movies instead?",
      "I'm afraid I can't answer that.",
      "How do you feel about that?",
      "Good point.",
      "I see.",
      "Go on.",
      "Why do you ask?",
      "Is there anything else on your mind?",
      "What else is new with you?",
  };
  return v;
}

const std::vector<std::string>& initiator_phrases() {
  static const std::vector<std::string> v = {
      "What did you do today?",
      "Do you have pets?",
      "What kind of news stories interest you the most?",
      "How was your day?",
      "Do you believe in love at first sight?",
      "What is your favorite movie?",
      "What kind of music do you like?",
      "Have you read any good books lately?",
      "Where would you like to travel next?",
      "What is your favorite food?",
      "Do you play any sports?",
      "What do you like to do on weekends?",
      "Who is your favorite actor?",
      "What is the best concert you have been to?",
      "Do you prefer cats or dogs?",
      "What would you do with a million dollars?",
      "If you could have any superpower, what would it be?",
      "What is your favorite season of the year?",
      "Do you follow politics?",
      "What was the last movie you watched?",
      "Do you like science fiction?",
      "What is something that made you laugh recently?",
      "Do you cook?",
      "What is your dream job?",
      "Do you have any hobbies?",
      "What is the most interesting place you have visited?",
      "Do you like video games?",
      "What is your favorite TV show?",
      "Are you a morning person or a night owl?",
      "What do you think about artificial intelligence?",
      "Do you enjoy being outdoors?",
      "What is your favorite holiday?",
      "Do you play a musical instrument?",
      "Who inspires you the most?",
      "What have you been curious about lately?",
      "Do you like to dance?",
      "What sport do you enjoy watching?",
      "Which movie could you watch over and over?",
      "Did you know that <fact>?",
      "Did you know that <fact>? Isn't that amazing?",
  };
  return v;
}

const std::vector<Story>& stories() {
  static const std::vector<Story> v = {
      {"The Ant and The Grasshopper",
       "The ants worked hard in summer. They sorted food for winter. At that time, a grasshopper "
       "remained idle. When winter came, the ants had enough to eat. But, the grasshopper had "
       "nothing to eat. He had to starve. He went to the ants and begged for foods. The ants asked "
       "in return, \"What did you do in summer?\" He replied, \"I idled away my time during "
       "summer\". The ant replied, \"Then you must starve in winter.\" MORAL: Never be idle.",
       "Aesop"},
      {"The Fox and The Grapes",
       "A hungry fox saw some fine bunches of grapes hanging from a vine. He tried to reach them "
       "by jumping, but they were too high. At last he gave up and walked away, saying, \"I am "
       "sure they are sour.\" MORAL: It is easy to despise what you cannot get.",
       "Aesop"},
      {"The Lion and The Mouse",
       "A lion caught a little mouse and was about to eat it. The mouse begged for its life and "
       "promised to help the lion one day. The lion laughed and let it go. Later the lion was "
       "trapped in a hunter's net, and the mouse gnawed the ropes and set him free. MORAL: Little "
       "friends may prove great friends.",
       "Aesop"},
  };
  return v;
}

const std::vector<std::string>& trump_triggers() {
  static const std::vector<std::string> v = {"trump", "donald trump", "the donald",
                                             "president trump", "make america great again"};
  return v;
}

const std::vector<std::string>& got_triggers() {
  static const std::vector<std::string> v = {
      "game of thrones", "jon snow", "westeros", "winterfell", "lannister", "targaryen",
      "daenerys", "tyrion", "stark", "white walkers", "khaleesi", "arya"};
  return v;
}

const std::map<std::string, std::string>& qa_fixture() {
  static const std::map<std::string, std::string> v = {
      {"who is einstein", "Albert Einstein was a theoretical physicist who developed the theory of "
                          "relativity."},
      {"einstein", "Albert Einstein was a theoretical physicist who developed the theory of "
                   "relativity."},
      {"albert einstein", "Albert Einstein was a theoretical physicist who developed the theory "
                          "of relativity."},
      {"what is the capital of france", "The capital of France is Paris."},
      {"france", "France is a country in Western Europe."},
      {"star wars movie", "Star Wars movie a movie in the Star Wars series."},
      {"star wars", "Star Wars is an American epic space opera franchise."},
      {"how tall is the eiffel tower", "The Eiffel Tower is 330 metres tall."},
      {"eiffel tower", "The Eiffel Tower is a wrought-iron lattice tower in Paris."},
      {"who wrote hamlet", "Hamlet was written by William Shakespeare."},
      {"hamlet", "Hamlet is a tragedy written by William Shakespeare."},
      {"what is the tallest mountain", "Mount Everest is the tallest mountain above sea level."},
      {"mount everest", "Mount Everest is Earth's highest mountain above sea level."},
      {"who is the president of the united states",
       "The president of the United States is the head of state of the United States."},
      {"united states", "The United States is a country in North America."},
      {"what is a rabbit", "A rabbit is a small mammal in the family Leporidae."},
      {"rabbits", "Rabbits are small mammals in the family Leporidae."},
      {"chess", "Chess is a board game for two players."},
      {"i like chess", "Chess is a board game for two players."},
      {"what is the speed of light", "The speed of light is 299,792,458 metres per second."},
      {"paris", "Paris is the capital and most populous city of France."},
      {"japan", "Japan is an island country in East Asia."},
      {"what time is it", "ERROR"},
  };
  return v;
}

const std::map<std::string, std::vector<std::string>>& search_fixture() {
  static const std::map<std::string, std::vector<std::string>> v = {
      {"who is einstein",
       {"Albert Einstein was a German-born theoretical physicist. He developed the theory of "
        "relativity. Einstein is best known for",
        "Einstein | Biography, Education, Discoveries. He received the Nobel Prize in 1921. "
        "Read more ...",
        "Mar 23, 2017 ... Einstein facts for kids. He liked to play the violin. He"}},
      {"tell me about rabbits",
       {"Mar 23, 2017 Two Parts: Learning What to Feed Your Rabbit Learning How to ...",
        "Rabbits are small mammals. They live in groups called colonies. Rabbits are",
        "Pet rabbits need hay and fresh water every day. They can live ten years. Some"}},
      {"star wars movie",
       {"A third Anthology film will be released in 2020. The release date is not yet",
        "Star Wars is an epic space opera franchise. It was created by George Lucas. The first"}},
      {"i like chess",
       {"Chess is a two-player strategy board game. It is played on a checkered board. Chess "
        "is",
        "Chess clubs meet weekly in most cities. Players of all levels are welcome."}},
      {"what is the best pizza",
       {"Neapolitan pizza is often called the best style. It has a thin crust! Many people",
        "The best pizza toppings are a matter of taste. Pepperoni is the most popular."}},
  };
  return v;
}

std::vector<std::string> vocabulary() {
  std::set<std::string> words;
  auto add = [&](const std::string& s) {
    for (auto& t : text::tokenize(s)) words.insert(t);
  };
  for (const auto* list : {&facts(), &trump_quotes(), &got_quotes(), &subtitle_replies(),
                           &escape_responses(), &initiator_phrases(), &trump_triggers(),
                           &got_triggers()})
    for (const auto& s : *list) add(s);
  for (const auto& st : stories()) {
    add(st.title);
    add(st.body);
    add(st.author);
  }
  for (const auto& [q, a] : qa_fixture()) {
    add(q);
    add(a);
  }
  for (const auto& [q, snippets] : search_fixture()) {
    add(q);
    for (const auto& s : snippets) add(s);
  }
  const auto& lx = Lexicon::bundled();
  for (const WordSet* ws : {&lx.stopwords, &lx.wh_words, &lx.intensifiers, &lx.negations,
                            &lx.profanity, &lx.confusion_words, &lx.political_keywords,
                            &lx.positive_words, &lx.negative_words, &lx.request_verbs})
    for (const auto& w : *ws) words.insert(w);
  return {words.begin(), words.end()};
}

}  // namespace bundled

}  // namespace converse
